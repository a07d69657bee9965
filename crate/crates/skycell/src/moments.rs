//! Closed-form expectations feeding the hardening-bound SINR under
//! maximum-ratio precoding.
//!
//! Maximum-ratio precoders point along the channels themselves
//! (`w_{l,i} = h_{l,i}` at the UAVs, `w_i = g_i` at the satellite), so every
//! expectation the SINR needs reduces to low-order moments of the channel
//! vectors: inner products `psi_{k,i,l} = h_{l,i}^H h_{l,k}`, the quartic
//! norm `E||h||^4`, and pairwise trace products. All are functions of the
//! per-link correlation matrix `E = mu mu^H + R` alone, except the quartic
//! norm, whose published per-antenna form is exact only for diagonal `R`
//! (see [`MomentMode`]).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::LinkStatistics;
use crate::numeric::{self, IndefiniteError};

/// Relative eigenvalue tolerance for factoring assembled `C^2` matrices.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// How the quartic norm `E||h||^4` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentMode {
    /// Exact fourth moment of a correlated complex Gaussian vector:
    /// `(tr E)^2 + tr(E^2) - ||mu||^4`. Correct for any covariance.
    #[default]
    ExactGaussian,
    /// Per-antenna evaluation that treats elements as independent:
    /// `sum_m E|h_m|^4 + sum_{m != m'} E|h_m|^2 E|h_m'|^2`. Exact only when
    /// the covariance is diagonal; retained as a selectable variant so the
    /// discrepancy on correlated arrays stays observable.
    Elementwise,
}

impl MomentMode {
    /// Canonical command-line token.
    pub fn as_str(self) -> &'static str {
        match self {
            MomentMode::ExactGaussian => "exact",
            MomentMode::Elementwise => "paper",
        }
    }
}

impl std::str::FromStr for MomentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" | "exact_gaussian" => Ok(MomentMode::ExactGaussian),
            // "paper" selects the element-wise variant.
            "paper" | "elementwise" | "paper_elementwise" => Ok(MomentMode::Elementwise),
            other => Err(format!(
                "unknown moment mode {other:?} (expected \"exact\" or \"paper\")"
            )),
        }
    }
}

impl std::fmt::Display for MomentMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

// ---------------------------------------------------------------------------
// Elementary moments
// ---------------------------------------------------------------------------

/// Mean of the same-user inner product: `E{h^H h} = tr(E)`.
pub fn mean_psi_same(stats: &LinkStatistics) -> f64 {
    stats.corr_trace()
}

/// Mean of the cross-user inner product at one UAV:
/// `E{h_i^H h_k} = mu_i^H mu_k` (the scattered parts are independent,
/// zero-mean). Conjugate-symmetric under swapping the two links.
pub fn mean_psi_cross(precoder: &LinkStatistics, target: &LinkStatistics) -> Complex64 {
    assert_eq!(precoder.len(), target.len(), "links must share the array");
    precoder.mu.dotc(&target.mu)
}

/// Quartic norm `E||h||^4` in the selected mode.
pub fn fourth_moment_norm(stats: &LinkStatistics, mode: MomentMode) -> f64 {
    match mode {
        MomentMode::ExactGaussian => {
            let tr = stats.corr_trace();
            let tr_sq = numeric::trace_product_hermitian(&stats.corr, &stats.corr);
            tr * tr + tr_sq - numeric::norm_sq(&stats.mu).powi(2)
        }
        MomentMode::Elementwise => {
            // E|h_m|^2 = |mu_m|^2 + sigma_m^2 and
            // E|h_m|^4 = |mu_m|^4 + 4 |mu_m|^2 sigma_m^2 + 2 sigma_m^4,
            // combined as (sum_m E|h_m|^2)^2 + sum_m (E|h_m|^4 - (E|h_m|^2)^2).
            let mut sum_e2 = 0.0;
            let mut sum_var = 0.0;
            for m in 0..stats.len() {
                let mu_sq = stats.mu[m].norm_sqr();
                let var = stats.nlos_cov[(m, m)].re;
                let e2 = mu_sq + var;
                let e4 = mu_sq * mu_sq + 4.0 * mu_sq * var + 2.0 * var * var;
                sum_e2 += e2;
                sum_var += e4 - e2 * e2;
            }
            sum_e2 * sum_e2 + sum_var
        }
    }
}

/// Same-user cross-UAV second moment:
/// `E{||h_{l,k}||^2 ||h_{l',k}||^2} = tr(E_{l,k}) tr(E_{l',k})` for
/// `l != l'`, by independence across UAVs.
pub fn second_moment_same_offdiag(a: &LinkStatistics, b: &LinkStatistics) -> f64 {
    a.corr_trace() * b.corr_trace()
}

/// Cross-user same-UAV second moment:
/// `E{|h_{l,i}^H h_{l,k}|^2} = tr(E_{l,i} E_{l,k})` for `i != k`, by
/// conditioning on either independent vector.
pub fn second_moment_cross_diag(a: &LinkStatistics, b: &LinkStatistics) -> f64 {
    assert_eq!(a.len(), b.len(), "links must share the array");
    numeric::trace_product_hermitian(&a.corr, &b.corr)
}

/// Cross-user cross-UAV second moment:
/// `E{(h_{l,i}^H h_{l,k})(h_{l',k}^H h_{l',i})} =
/// (mu_{l,i}^H mu_{l,k}) (mu_{l',k}^H mu_{l',i})` for `i != k`, `l != l'`;
/// each factor is a mean because everything is independent across UAVs.
pub fn second_moment_cross_offdiag(
    precoder_l: &LinkStatistics,
    target_l: &LinkStatistics,
    precoder_lp: &LinkStatistics,
    target_lp: &LinkStatistics,
) -> Complex64 {
    mean_psi_cross(precoder_l, target_l) * mean_psi_cross(target_lp, precoder_lp)
}

/// Factor `F` with `F F^H = C^2`, clipping eigenvalues above
/// `-1e-10 * trace` to zero (quadrature round-off), rejecting anything
/// more negative.
pub fn psd_factor(csq: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>, IndefiniteError> {
    numeric::hermitian_psd_factor(csq, PSD_TOLERANCE)
}

// ---------------------------------------------------------------------------
// Assembled tables
// ---------------------------------------------------------------------------

/// Every expectation the closed-form SINR consumes.
///
/// Index convention: `b[k][i]` and `csq[k][i]` describe how user `i`'s
/// transmission lands on user `k`'s channel; the diagonal `i = k` carries
/// the desired-signal statistics.
#[derive(Debug, Clone)]
pub struct PrecodingMoments {
    /// `b[k][i][l] = E{h_{l,i}^H h_{l,k}}`; real positive on the diagonal
    /// `i = k` where it is a vector of correlation traces.
    pub b: Vec<Vec<DVector<Complex64>>>,
    /// Second-moment matrices of the inner-product vectors. For `i = k`
    /// this is the covariance of `psi_{k,k}` (mean outer product removed,
    /// leaving a diagonal matrix); for `i != k` it is the full second
    /// moment `E{psi psi^H}`, since interference contributes all its power.
    pub csq: Vec<Vec<DMatrix<Complex64>>>,
    /// Factors with `cfac[k][i] * cfac[k][i]^H = csq[k][i]`.
    pub cfac: Vec<Vec<DMatrix<Complex64>>>,
    /// `w_norm_sq[(l, i)] = E||w_{l,i}||^2 = tr(E_{l,i})`: the mean radiated
    /// energy per unit power coefficient.
    pub w_norm_sq: DMatrix<f64>,
    /// `sat_signal[k] = E{g_k^H w_k} = tr(E^g_k)` (real for MR).
    pub sat_signal: Vec<f64>,
    /// `sat_fourth[k] = E||g_k||^4` in the assembly's moment mode.
    pub sat_fourth: Vec<f64>,
    /// `sat_cross[(k, i)] = E{|g_k^H g_i|^2} = tr(E^g_i E^g_k)` for
    /// `i != k`; the diagonal is zero (the `i = k` case is `sat_fourth`).
    pub sat_cross: DMatrix<f64>,
}

impl PrecodingMoments {
    pub fn num_uavs(&self) -> usize {
        self.w_norm_sq.nrows()
    }

    pub fn num_gus(&self) -> usize {
        self.w_norm_sq.ncols()
    }

    /// Satellite-induced interference power at user `k` under satellite
    /// powers `eta_sn`: the own-signal variance plus all cross powers,
    /// `B_k = eta_k (E||g_k||^4 - tr(E^g_k)^2)
    ///        + sum_{i != k} eta_i E{|g_k^H g_i|^2}`.
    pub fn sat_interference(&self, k: usize, eta_sn: &[f64]) -> f64 {
        assert_eq!(eta_sn.len(), self.num_gus());
        let own = self.sat_fourth[k] - self.sat_signal[k] * self.sat_signal[k];
        let cross: f64 = eta_sn
            .iter()
            .enumerate()
            .map(|(i, &eta)| eta * self.sat_cross[(k, i)])
            .sum();
        eta_sn[k] * own + cross
    }
}

/// Assemble all moment tables from per-link statistics. `uav[l][k]` is the
/// UAV `l` to user `k` link; `sat[k]` the satellite link of user `k`.
pub fn assemble_moments(
    uav: &[Vec<LinkStatistics>],
    sat: &[LinkStatistics],
    mode: MomentMode,
) -> Result<PrecodingMoments, IndefiniteError> {
    let num_uavs = uav.len();
    let num_gus = sat.len();
    assert!(uav.iter().all(|row| row.len() == num_gus), "ragged link table");

    let w_norm_sq = DMatrix::from_fn(num_uavs, num_gus, |l, i| mean_psi_same(&uav[l][i]));

    let mut b = Vec::with_capacity(num_gus);
    let mut csq = Vec::with_capacity(num_gus);
    let mut cfac = Vec::with_capacity(num_gus);
    for k in 0..num_gus {
        let mut b_row = Vec::with_capacity(num_gus);
        let mut csq_row = Vec::with_capacity(num_gus);
        let mut cfac_row = Vec::with_capacity(num_gus);
        for i in 0..num_gus {
            let (b_ki, csq_ki) = if i == k {
                // Desired signal: mean is the trace vector, and the
                // variance is diagonal because different UAVs fade
                // independently.
                let b_ki = DVector::from_fn(num_uavs, |l, _| {
                    Complex64::new(mean_psi_same(&uav[l][k]), 0.0)
                });
                let csq_ki = DMatrix::from_fn(num_uavs, num_uavs, |l, lp| {
                    if l == lp {
                        let tr = mean_psi_same(&uav[l][k]);
                        Complex64::new(fourth_moment_norm(&uav[l][k], mode) - tr * tr, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                (b_ki, csq_ki)
            } else {
                // Interference: full second moment. Off-diagonal entries
                // factor into means; on the diagonal the exact power is the
                // trace product.
                let b_ki =
                    DVector::from_fn(num_uavs, |l, _| mean_psi_cross(&uav[l][i], &uav[l][k]));
                let csq_ki = DMatrix::from_fn(num_uavs, num_uavs, |l, lp| {
                    if l == lp {
                        Complex64::new(second_moment_cross_diag(&uav[l][i], &uav[l][k]), 0.0)
                    } else {
                        second_moment_cross_offdiag(
                            &uav[l][i],
                            &uav[l][k],
                            &uav[lp][i],
                            &uav[lp][k],
                        )
                    }
                });
                (b_ki, csq_ki)
            };
            cfac_row.push(psd_factor(&csq_ki)?);
            b_row.push(b_ki);
            csq_row.push(csq_ki);
        }
        b.push(b_row);
        csq.push(csq_row);
        cfac.push(cfac_row);
    }

    let sat_signal: Vec<f64> = sat.iter().map(mean_psi_same).collect();
    let sat_fourth: Vec<f64> = sat.iter().map(|s| fourth_moment_norm(s, mode)).collect();
    let sat_cross = DMatrix::from_fn(num_gus, num_gus, |k, i| {
        if i == k {
            0.0
        } else {
            second_moment_cross_diag(&sat[i], &sat[k])
        }
    });

    for k in 0..num_gus {
        assert!(
            sat_fourth[k] >= sat_signal[k] * sat_signal[k] * (1.0 - 1e-12),
            "quartic moment below squared mean for satellite user {k}"
        );
        for l in 0..num_uavs {
            let v = b[k][k][l];
            assert!(v.im == 0.0 && v.re > 0.0, "diagonal b must be real positive");
        }
    }

    Ok(PrecodingMoments {
        b,
        csq,
        cfac,
        w_norm_sq,
        sat_signal,
        sat_fourth,
        sat_cross,
    })
}
