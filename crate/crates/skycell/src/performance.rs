//! Closed-form spectral efficiency, power consumption, and energy
//! efficiency for a given power allocation.
//!
//! The per-user SE is the channel-hardening bound `log2(1 + SINR_k)` with
//! every expectation taken from the assembled moment tables, so evaluating
//! a candidate allocation costs no sampling. Energy efficiency divides the
//! sum SE by the UAV-layer power model: amplifier-scaled radiated power
//! plus per-UAV signal-processing and hovering overheads.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::moments::PrecodingMoments;
use crate::scenario::{Mode, ScenarioConfig};

/// Downlink power coefficients for every transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    /// `eta_ap[(l, i)]`: UAV `l`'s coefficient for user `i`, in watts.
    pub eta_ap: DMatrix<f64>,
    /// `eta_sn[i]`: the satellite's coefficient for user `i`, in watts.
    pub eta_sn: Vec<f64>,
}

/// Slack allowed on the power budgets, watts.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BudgetError {
    #[error("UAV {uav} radiates {used:.6e} W against a budget of {budget:.6e} W")]
    UavBudget { uav: usize, used: f64, budget: f64 },
    #[error("satellite radiates {used:.6e} W against a budget of {budget:.6e} W")]
    SatBudget { used: f64, budget: f64 },
    #[error("negative power coefficient at ({row}, {col})")]
    Negative { row: usize, col: usize },
}

impl PowerAllocation {
    /// All-zero allocation for `l` UAVs and `k` users.
    pub fn zeros(l: usize, k: usize) -> Self {
        PowerAllocation {
            eta_ap: DMatrix::zeros(l, k),
            eta_sn: vec![0.0; k],
        }
    }

    pub fn num_uavs(&self) -> usize {
        self.eta_ap.nrows()
    }

    pub fn num_gus(&self) -> usize {
        self.eta_ap.ncols()
    }

    /// The allocation actually transmitted in `mode`: terrestrial-only
    /// silences the satellite, satellite-only silences the UAVs.
    pub fn effective(&self, mode: Mode) -> PowerAllocation {
        let mut out = self.clone();
        match mode {
            Mode::NtnTn => {}
            Mode::TnOnly => out.eta_sn.iter_mut().for_each(|e| *e = 0.0),
            Mode::NtnOnly => out.eta_ap.fill(0.0),
        }
        out
    }

    /// Mean power radiated by UAV `l`: `sum_i eta_ap[l,i] * E||w_{l,i}||^2`.
    pub fn uav_radiated(&self, l: usize, moments: &PrecodingMoments) -> f64 {
        (0..self.num_gus())
            .map(|i| self.eta_ap[(l, i)] * moments.w_norm_sq[(l, i)])
            .sum()
    }

    /// Mean power radiated by the satellite: `sum_i eta_sn[i] * tr(E^g_i)`.
    pub fn sat_radiated(&self, moments: &PrecodingMoments) -> f64 {
        self.eta_sn
            .iter()
            .enumerate()
            .map(|(i, &eta)| eta * moments.sat_signal[i])
            .sum()
    }

    /// Check nonnegativity and both power budgets (within
    /// [`BUDGET_TOLERANCE`]).
    pub fn check_budgets(
        &self,
        moments: &PrecodingMoments,
        config: &ScenarioConfig,
    ) -> Result<(), BudgetError> {
        for l in 0..self.num_uavs() {
            for i in 0..self.num_gus() {
                if self.eta_ap[(l, i)] < 0.0 {
                    return Err(BudgetError::Negative { row: l, col: i });
                }
            }
        }
        for (i, &eta) in self.eta_sn.iter().enumerate() {
            if eta < 0.0 {
                return Err(BudgetError::Negative { row: usize::MAX, col: i });
            }
        }
        for l in 0..self.num_uavs() {
            let used = self.uav_radiated(l, moments);
            if used > config.p_ap_dl + BUDGET_TOLERANCE {
                return Err(BudgetError::UavBudget { uav: l, used, budget: config.p_ap_dl });
            }
        }
        let sat_used = self.sat_radiated(moments);
        if sat_used > config.p_sn_dl + BUDGET_TOLERANCE {
            return Err(BudgetError::SatBudget { used: sat_used, budget: config.p_sn_dl });
        }
        Ok(())
    }
}

/// Everything the experiments report about one allocation.
#[derive(Debug, Clone)]
pub struct PerformanceReport {
    /// Per-user SINR.
    pub sinr: Vec<f64>,
    /// Per-user SE, bit/s/Hz.
    pub se: Vec<f64>,
    /// Sum SE, bit/s/Hz.
    pub sum_se: f64,
    /// UAV-layer power consumption, W.
    pub p_tot: f64,
    /// Energy efficiency, bit/s/Hz per W.
    pub ee: f64,
    /// Bandwidth-scaled energy efficiency, bit/J.
    pub ee_bit_per_joule: f64,
}

/// Closed-form downlink SINR of user `k`:
///
/// ```text
///          eta_sn[k] tr(E^g_k)^2 + (b_{k,k}^T sqrt(eta_k))^2
/// SINR_k = -------------------------------------------------
///          B_k + sum_i ||Cfac_{k,i}^H sqrt(eta_i)||^2 + noise
/// ```
///
/// where `sqrt(eta_i)` is the entrywise root of column `i` of `eta_ap` and
/// `B_k` is the satellite interference. The `i = k` term of the sum is the
/// beamforming-uncertainty variance (its mean is the signal).
pub fn sinr_dl(
    k: usize,
    alloc: &PowerAllocation,
    moments: &PrecodingMoments,
    noise_w: f64,
) -> f64 {
    assert!(noise_w > 0.0, "noise power must be positive");
    let num_uavs = moments.num_uavs();
    let num_gus = moments.num_gus();
    let sqrt_eta = |i: usize| {
        DVector::from_fn(num_uavs, |l, _| {
            Complex64::new(alloc.eta_ap[(l, i)].max(0.0).sqrt(), 0.0)
        })
    };

    let signal_ap: f64 = (0..num_uavs)
        .map(|l| moments.b[k][k][l].re * alloc.eta_ap[(l, k)].max(0.0).sqrt())
        .sum();
    let numerator =
        alloc.eta_sn[k] * moments.sat_signal[k] * moments.sat_signal[k] + signal_ap * signal_ap;

    let mut interference = moments.sat_interference(k, &alloc.eta_sn);
    for i in 0..num_gus {
        let v = moments.cfac[k][i].adjoint() * sqrt_eta(i);
        interference += v.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    numerator / (interference + noise_w)
}

/// Hardening-bound SE, bit/s/Hz.
pub fn se_dl(sinr: f64) -> f64 {
    assert!(sinr >= 0.0, "SINR cannot be negative");
    (1.0 + sinr).log2()
}

/// UAV-layer power consumption, W:
/// `sum_l ( (1/eps) sum_i eta_ap[l,i] tr(E_{l,i}) + M P_dsp + P_hov )`.
/// The satellite's energy budget is out of scope, so `eta_sn` does not
/// appear.
pub fn total_power(
    alloc: &PowerAllocation,
    moments: &PrecodingMoments,
    config: &ScenarioConfig,
) -> f64 {
    let radiated: f64 = (0..alloc.num_uavs())
        .map(|l| alloc.uav_radiated(l, moments))
        .sum();
    radiated / config.amp_efficiency + config.fixed_power_w()
}

/// Full report for `alloc` under the config's transmission mode. The mode
/// is applied first ([`PowerAllocation::effective`]), so a terrestrial-only
/// evaluation of a joint allocation silences the satellite, and vice versa.
pub fn energy_efficiency(
    alloc: &PowerAllocation,
    moments: &PrecodingMoments,
    config: &ScenarioConfig,
) -> PerformanceReport {
    let eff = alloc.effective(config.mode);
    let noise = config.noise_power_w();
    let sinr: Vec<f64> = (0..moments.num_gus())
        .map(|k| sinr_dl(k, &eff, moments, noise))
        .collect();
    let se: Vec<f64> = sinr.iter().map(|&s| se_dl(s)).collect();
    let sum_se: f64 = se.iter().sum();
    let p_tot = total_power(&eff, moments, config);
    let ee = sum_se / p_tot;
    let report = PerformanceReport {
        ee_bit_per_joule: sum_se * config.bandwidth / p_tot,
        sinr,
        se,
        sum_se,
        p_tot,
        ee,
    };
    debug_assert!(
        report.sinr.iter().chain(report.se.iter()).all(|v| v.is_finite() && *v >= 0.0)
            && report.p_tot.is_finite()
            && report.ee.is_finite()
            && report.ee >= 0.0
    );
    report
}
