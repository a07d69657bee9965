//! Baseline power-allocation strategies and the feasible starting point
//! for the energy-efficiency optimizer.
//!
//! Fractional power allocation (FPA) weights each user by a power of its
//! mean channel energy; the exponent `nu = -1` is equal power allocation
//! (EPA), where every user receives the same radiated power. The random
//! search draws per-coefficient gridpoints until budget and minimum-SE
//! constraints hold, falling back deterministically to EPA and, failing
//! that, reporting the scenario infeasible.

use nalgebra::DMatrix;
use rand::{Rng, RngExt};
use thiserror::Error;

use crate::moments::PrecodingMoments;
use crate::performance::{se_dl, sinr_dl, PowerAllocation};
use crate::scenario::ScenarioConfig;

/// Joint redraws attempted before the random search gives up.
pub const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error)]
pub enum AllocationError {
    #[error("user {index} has zero mean channel energy; FPA needs nu >= 0 for that")]
    ZeroTrace { index: usize },
    #[error("no feasible allocation: {} user(s) below the SE floor {se_min} \
             (worst: user {worst_gu} at {worst_se})",
            violations.len())]
    Infeasible {
        /// `(user, achieved SE)` for every user below the floor under EPA.
        violations: Vec<(usize, f64)>,
        se_min: f64,
        worst_gu: usize,
        worst_se: f64,
    },
}

/// How the starting point was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMethod {
    /// A random draw passed both constraints on attempt `attempts`
    /// (1-based).
    RandomSearch { attempts: usize },
    /// All draws failed; the deterministic EPA fallback passed.
    EpaFallback,
}

/// Fractional power allocation for one transmitter:
/// `eta_k = P * tr_k^nu / sum_i tr_i^(nu+1)`. The radiated power
/// `sum_k eta_k tr_k` equals `P` exactly by construction, and each user's
/// share grows (`nu > -1`) or shrinks with its channel energy.
pub fn fractional_pa(nu: f64, budget: f64, traces: &[f64]) -> Result<Vec<f64>, AllocationError> {
    assert!(budget >= 0.0, "budget must be nonnegative");
    assert!(!traces.is_empty(), "need at least one user");
    for (i, &tr) in traces.iter().enumerate() {
        assert!(tr >= 0.0, "negative channel energy for user {i}");
        if tr == 0.0 && nu < 0.0 {
            return Err(AllocationError::ZeroTrace { index: i });
        }
    }
    let denom: f64 = traces.iter().map(|&tr| tr.powf(nu + 1.0)).sum();
    assert!(denom > 0.0, "all users have zero channel energy");
    Ok(traces.iter().map(|&tr| budget * tr.powf(nu) / denom).collect())
}

/// Equal power allocation at the satellite: FPA with `nu = -1` on the
/// satellite channel energies, so every user is radiated `P_sn / K`.
pub fn satellite_epa(
    config: &ScenarioConfig,
    moments: &PrecodingMoments,
) -> Result<Vec<f64>, AllocationError> {
    fractional_pa(-1.0, config.p_sn_dl, &moments.sat_signal)
}

/// Equal power allocation at every UAV plus EPA at the satellite.
pub fn epa(
    config: &ScenarioConfig,
    moments: &PrecodingMoments,
) -> Result<PowerAllocation, AllocationError> {
    let num_uavs = moments.num_uavs();
    let num_gus = moments.num_gus();
    let mut eta_ap = DMatrix::zeros(num_uavs, num_gus);
    for l in 0..num_uavs {
        let traces: Vec<f64> = (0..num_gus).map(|i| moments.w_norm_sq[(l, i)]).collect();
        let row = fractional_pa(-1.0, config.p_ap_dl, &traces)?;
        for (i, eta) in row.into_iter().enumerate() {
            eta_ap[(l, i)] = eta;
        }
    }
    Ok(PowerAllocation {
        eta_ap,
        eta_sn: satellite_epa(config, moments)?,
    })
}

/// Fractional power allocation with exponent `nu` at every UAV and at the
/// satellite.
pub fn fpa(
    config: &ScenarioConfig,
    moments: &PrecodingMoments,
    nu: f64,
) -> Result<PowerAllocation, AllocationError> {
    let num_uavs = moments.num_uavs();
    let num_gus = moments.num_gus();
    let mut eta_ap = DMatrix::zeros(num_uavs, num_gus);
    for l in 0..num_uavs {
        let traces: Vec<f64> = (0..num_gus).map(|i| moments.w_norm_sq[(l, i)]).collect();
        let row = fractional_pa(nu, config.p_ap_dl, &traces)?;
        for (i, eta) in row.into_iter().enumerate() {
            eta_ap[(l, i)] = eta;
        }
    }
    Ok(PowerAllocation {
        eta_ap,
        eta_sn: fractional_pa(nu, config.p_sn_dl, &moments.sat_signal)?,
    })
}

/// Does `alloc` reach the SE floor for every user in the config's mode?
/// Returns the violating users and their achieved SE.
fn qos_violations(
    alloc: &PowerAllocation,
    moments: &PrecodingMoments,
    config: &ScenarioConfig,
) -> Vec<(usize, f64)> {
    let eff = alloc.effective(config.mode);
    let noise = config.noise_power_w();
    (0..moments.num_gus())
        .filter_map(|k| {
            let se = se_dl(sinr_dl(k, &eff, moments, noise));
            (se < config.se_min).then_some((k, se))
        })
        .collect()
}

/// Starting point for the optimizer: draw every UAV coefficient from
/// `grid_points` equally spaced values in `[0, P_ap]`, rescale any UAV row
/// that exceeds its budget, pair with EPA at the satellite, and accept the
/// first draw whose closed-form SE clears the floor for every user. After
/// [`MAX_ATTEMPTS`] joint redraws the deterministic EPA fallback is tried;
/// if even EPA misses the floor the scenario is reported infeasible with
/// the violating users.
pub fn random_search_init(
    config: &ScenarioConfig,
    moments: &PrecodingMoments,
    rng: &mut impl Rng,
) -> Result<(PowerAllocation, InitMethod), AllocationError> {
    let grid = config.rs_grid;
    assert!(grid >= 2, "grid needs at least the two endpoints");
    let num_uavs = moments.num_uavs();
    let num_gus = moments.num_gus();
    let eta_sn = satellite_epa(config, moments)?;
    let step = config.p_ap_dl / (grid - 1) as f64;

    for attempt in 1..=MAX_ATTEMPTS {
        let mut eta_ap = DMatrix::zeros(num_uavs, num_gus);
        for l in 0..num_uavs {
            for k in 0..num_gus {
                eta_ap[(l, k)] = step * rng.random_range(0..grid) as f64;
            }
        }
        // Scale overweight rows back onto the budget; the random
        // direction is preserved.
        for l in 0..num_uavs {
            let radiated: f64 =
                (0..num_gus).map(|i| eta_ap[(l, i)] * moments.w_norm_sq[(l, i)]).sum();
            if radiated > config.p_ap_dl {
                let scale = config.p_ap_dl / radiated;
                for i in 0..num_gus {
                    eta_ap[(l, i)] *= scale;
                }
            }
        }
        let candidate = PowerAllocation { eta_ap, eta_sn: eta_sn.clone() };
        if qos_violations(&candidate, moments, config).is_empty() {
            return Ok((candidate, InitMethod::RandomSearch { attempts: attempt }));
        }
    }

    let fallback = epa(config, moments)?;
    let violations = qos_violations(&fallback, moments, config);
    if violations.is_empty() {
        return Ok((fallback, InitMethod::EpaFallback));
    }
    let &(worst_gu, worst_se) = violations
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty violations");
    Err(AllocationError::Infeasible {
        violations,
        se_min: config.se_min,
        worst_gu,
        worst_se,
    })
}
