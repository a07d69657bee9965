//! Per-link statistical channel descriptions and channel sampling.
//!
//! Every link (UAV-to-user or satellite-to-user) is a spatially correlated
//! Rician vector channel `h = hbar + htilde`: a deterministic line-of-sight
//! component `hbar = sqrt(pr_los * beta_los * kappa/(kappa+1)) * a(phi)`
//! along the array response, plus a correlated scattered component with
//! covariance `R` from a Gaussian local scattering model. The closed-form
//! layers consume only the pair `(mu, R)` through the correlation matrix
//! `E = mu mu^H + R`; the Monte Carlo oracle additionally draws
//! realizations `h = mu + F z` with `F F^H = R`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, RngExt};
use rand_distr::StandardNormal;

use crate::numeric::{self, IndefiniteError};
use crate::scenario::{Geometry, ScenarioConfig};

/// Antenna gain of a UAV array element, dBi.
pub const UAV_ANTENNA_GAIN_DBI: f64 = 10.0;
/// Antenna gain of a ground user, dBi.
pub const GU_ANTENNA_GAIN_DBI: f64 = 10.0;
/// Antenna gain of the satellite array, dBi.
pub const SAT_ANTENNA_GAIN_DBI: f64 = 30.0;
/// Path-loss reference distance d0, meters.
pub const PATHLOSS_REF_DISTANCE_M: f64 = 1.0;

/// Relative eigenvalue tolerance accepted when factoring covariance
/// matrices; quadrature round-off sits far below this.
pub const PSD_TOLERANCE: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Scalar link models
// ---------------------------------------------------------------------------

/// Probability of a line-of-sight link at elevation `theta_deg` (degrees):
/// `1 / (1 + a exp(-b theta + a b))`. Strictly increasing in elevation.
///
/// Panics if `theta_deg` is outside [0, 90] or the constants are not
/// positive; those are configuration errors caught upstream.
pub fn los_probability(theta_deg: f64, a: f64, b: f64) -> f64 {
    assert!(
        (0.0..=90.0).contains(&theta_deg),
        "elevation {theta_deg} deg outside [0, 90]"
    );
    assert!(a > 0.0 && b > 0.0, "line-of-sight constants must be positive");
    1.0 / (1.0 + a * (-b * theta_deg + a * b).exp())
}

/// Large-scale gain of a UAV-to-user link, in dB (negative in practice):
/// `G_l + G_k - 8.5 - 38.63 log10(d/d0) - 20 log10(f_c) + z`,
/// with `d` in meters, `f_c` in GHz, and `z` a shadow-fading draw in dB.
///
/// Panics if `d` is closer than the reference distance.
pub fn uav_pathloss_db(d_m: f64, g_l_dbi: f64, g_k_dbi: f64, f_c_ghz: f64, shadow_db: f64) -> f64 {
    assert!(
        d_m >= PATHLOSS_REF_DISTANCE_M,
        "link distance {d_m} m below the {PATHLOSS_REF_DISTANCE_M} m reference"
    );
    g_l_dbi + g_k_dbi - 8.5 - 38.63 * (d_m / PATHLOSS_REF_DISTANCE_M).log10()
        - 20.0 * f_c_ghz.log10()
        + shadow_db
}

/// Large-scale gain of the satellite-to-user link, in dB:
/// `G + G_k - 32.45 - 20 log10(d/d0) - 20 log10(f_c) + z` (free-space slope).
pub fn sat_pathloss_db(d_m: f64, g_dbi: f64, g_k_dbi: f64, f_c_ghz: f64, shadow_db: f64) -> f64 {
    assert!(
        d_m >= PATHLOSS_REF_DISTANCE_M,
        "link distance {d_m} m below the {PATHLOSS_REF_DISTANCE_M} m reference"
    );
    g_dbi + g_k_dbi - 32.45 - 20.0 * (d_m / PATHLOSS_REF_DISTANCE_M).log10()
        - 20.0 * f_c_ghz.log10()
        + shadow_db
}

/// Rician factor of a UAV-to-user link, linear scale:
/// `kappa_dB = 15 + 1.0 log10(d)` with `d` in meters.
pub fn rician_factor_uav(d_m: f64) -> f64 {
    assert!(d_m >= 1.0, "Rician factor model needs d >= 1 m");
    10f64.powf((15.0 + d_m.log10()) / 10.0)
}

/// Rician factor of the satellite-to-user link, linear scale:
/// `kappa_dB = 9.5 + 10 log10(N) + 0.5 log10(d)` with `d` in meters.
pub fn rician_factor_sat(n_antennas: usize, d_m: f64) -> f64 {
    assert!(n_antennas >= 1, "satellite needs at least one antenna");
    assert!(d_m >= 1.0, "Rician factor model needs d >= 1 m");
    10f64.powf((9.5 + 10.0 * (n_antennas as f64).log10() + 0.5 * d_m.log10()) / 10.0)
}

/// Uniform-linear-array response at half-wavelength spacing:
/// `a(phi)_m = exp(j pi (m-1) sin phi)`, unit-modulus entries.
pub fn array_response(len: usize, phi_rad: f64) -> DVector<Complex64> {
    assert!(len >= 1, "array needs at least one element");
    let k = std::f64::consts::PI * phi_rad.sin();
    DVector::from_fn(len, |m, _| Complex64::from_polar(1.0, k * m as f64))
}

/// Covariance of the scattered component under Gaussian local scattering:
/// `[R]_{m,n} = scale * E_delta[exp(j pi (m-n) sin(phi + delta))]` with
/// `delta ~ N(0, sigma_delta^2)`. Hermitian Toeplitz with `scale` on the
/// diagonal; the expectation is evaluated by Gauss–Hermite quadrature.
pub fn scattering_covariance(
    len: usize,
    phi_rad: f64,
    sigma_delta_rad: f64,
    scale: f64,
) -> DMatrix<Complex64> {
    assert!(len >= 1, "array needs at least one element");
    assert!(sigma_delta_rad >= 0.0, "angular spread must be nonnegative");
    assert!(scale >= 0.0, "covariance scale must be nonnegative");
    let rule = numeric::gauss_hermite_default();
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    // One integral per diagonal offset; the substitution
    // delta = sqrt(2) sigma x turns the Gaussian average into the
    // Gauss–Hermite weight e^{-x^2}.
    let diagonals: Vec<Complex64> = (0..len)
        .map(|offset| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(x, w) in rule {
                let delta = std::f64::consts::SQRT_2 * sigma_delta_rad * x;
                let angle = std::f64::consts::PI * offset as f64 * (phi_rad + delta).sin();
                acc += Complex64::from_polar(w, angle);
            }
            acc * inv_sqrt_pi * scale
        })
        .collect();
    DMatrix::from_fn(len, len, |m, n| {
        if m >= n {
            diagonals[m - n]
        } else {
            diagonals[n - m].conj()
        }
    })
}

// ---------------------------------------------------------------------------
// Link statistics
// ---------------------------------------------------------------------------

/// Complete second-order description of one link.
#[derive(Debug, Clone)]
pub struct LinkStatistics {
    /// Line-of-sight mean vector `mu` (length M for UAV links, N for the
    /// satellite link).
    pub mu: DVector<Complex64>,
    /// Covariance `R` of the scattered component.
    pub nlos_cov: DMatrix<Complex64>,
    /// Correlation matrix `E = mu mu^H + R`; every closed-form moment is a
    /// function of this matrix and `mu` alone.
    pub corr: DMatrix<Complex64>,
    /// Large-scale gain of the line-of-sight component, linear.
    pub beta_los: f64,
    /// Large-scale gain of the scattered component, linear.
    pub beta_nlos: f64,
    /// Rician factor, linear.
    pub kappa: f64,
    /// Line-of-sight probability.
    pub pr_los: f64,
    /// Nominal angle of arrival, radians.
    pub aoa: f64,
}

impl LinkStatistics {
    /// Build the statistics from the scalar link parameters.
    ///
    /// Both large-scale gains come from the same path-loss draw; the
    /// line-of-sight versus scattered split is carried entirely by
    /// `pr_los` and the Rician factor, which keeps the total link gain
    /// equal to the path-loss value: `tr(E) = len * beta * (pr_los*kappa +
    /// 1 - pr_los) / (kappa + 1)`.
    pub fn from_parameters(
        len: usize,
        beta_los: f64,
        beta_nlos: f64,
        kappa: f64,
        pr_los: f64,
        aoa_rad: f64,
        asd_rad: f64,
    ) -> Self {
        assert!((0.0..=1.0).contains(&pr_los), "pr_los must be a probability");
        assert!(kappa >= 0.0 && beta_los >= 0.0 && beta_nlos >= 0.0);
        let mean_gain = (pr_los * beta_los * kappa / (kappa + 1.0)).sqrt();
        let mu = array_response(len, aoa_rad) * Complex64::new(mean_gain, 0.0);
        let scale = (1.0 - pr_los) * beta_nlos / (kappa + 1.0);
        let nlos_cov = scattering_covariance(len, aoa_rad, asd_rad, scale);
        let corr = &mu * mu.adjoint() + &nlos_cov;
        LinkStatistics {
            mu,
            nlos_cov,
            corr,
            beta_los,
            beta_nlos,
            kappa,
            pr_los,
            aoa: aoa_rad,
        }
    }

    /// Number of antennas on the array side of the link.
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Trace of the correlation matrix: the mean channel energy `E||h||^2`.
    pub fn corr_trace(&self) -> f64 {
        self.corr.trace().re
    }
}

/// Address of one link inside a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkId {
    /// UAV `uav` to ground user `gu`.
    Uav { uav: usize, gu: usize },
    /// Satellite to ground user `gu`.
    Sat { gu: usize },
}

/// Statistics of a single link. The RNG is consumed for one shadow-fading
/// draw (real Gaussian in the dB domain), so call order defines the
/// scenario's shadowing realization; [`scenario_statistics`] fixes that
/// order once for all links.
pub fn link_statistics(
    geometry: &Geometry,
    config: &ScenarioConfig,
    id: LinkId,
    rng: &mut impl Rng,
) -> LinkStatistics {
    match id {
        LinkId::Uav { uav, gu } => {
            let d = geometry.d_lk[(uav, gu)];
            let theta = geometry.theta_lk[(uav, gu)];
            let aoa = geometry.aoa_lk[(uav, gu)];
            let shadow = config.shadow_std_uav * rng.sample::<f64, _>(StandardNormal);
            let beta_db = uav_pathloss_db(
                d,
                UAV_ANTENNA_GAIN_DBI,
                GU_ANTENNA_GAIN_DBI,
                config.f_c,
                shadow,
            );
            let beta = 10f64.powf(beta_db / 10.0);
            let kappa = rician_factor_uav(d);
            let pr_los = los_probability(theta, config.los_a, config.los_b);
            LinkStatistics::from_parameters(
                config.uav_antennas,
                beta,
                beta,
                kappa,
                pr_los,
                aoa,
                config.asd,
            )
        }
        LinkId::Sat { gu } => {
            let d = geometry.d_k[gu];
            let theta = geometry.theta_k[gu];
            let aoa = geometry.aoa_k[gu];
            let shadow = config.shadow_std_sat * rng.sample::<f64, _>(StandardNormal);
            let beta_db = sat_pathloss_db(
                d,
                SAT_ANTENNA_GAIN_DBI,
                GU_ANTENNA_GAIN_DBI,
                config.f_c,
                shadow,
            );
            let beta = 10f64.powf(beta_db / 10.0);
            let kappa = rician_factor_sat(config.sat_antennas, d);
            let pr_los = los_probability(theta, config.los_a, config.los_b);
            LinkStatistics::from_parameters(
                config.sat_antennas,
                beta,
                beta,
                kappa,
                pr_los,
                aoa,
                config.asd_sat,
            )
        }
    }
}

/// Statistics for every link of the scenario.
#[derive(Debug, Clone)]
pub struct ScenarioStatistics {
    /// `uav[l][k]` is the UAV `l` to user `k` link.
    pub uav: Vec<Vec<LinkStatistics>>,
    /// `sat[k]` is the satellite to user `k` link.
    pub sat: Vec<LinkStatistics>,
}

/// Draw shadowing for, and assemble, all `L*K + K` links. Draw order is
/// UAV links row-major (all users of UAV 0, then UAV 1, ...), then the
/// satellite links by user; fixed so a seed pins the whole scenario.
pub fn scenario_statistics(
    geometry: &Geometry,
    config: &ScenarioConfig,
    rng: &mut impl Rng,
) -> ScenarioStatistics {
    let uav = (0..config.num_uavs)
        .map(|l| {
            (0..config.num_gus)
                .map(|k| link_statistics(geometry, config, LinkId::Uav { uav: l, gu: k }, rng))
                .collect()
        })
        .collect();
    let sat = (0..config.num_gus)
        .map(|k| link_statistics(geometry, config, LinkId::Sat { gu: k }, rng))
        .collect();
    ScenarioStatistics { uav, sat }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// One channel realization.
#[derive(Debug, Clone)]
pub struct ChannelSample {
    pub h: DVector<Complex64>,
}

/// Reusable sampler for one link: factors `R = F F^H` once so the hot
/// Monte Carlo loop only multiplies.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    mu: DVector<Complex64>,
    factor: DMatrix<Complex64>,
}

impl ChannelSampler {
    pub fn new(stats: &LinkStatistics) -> Result<Self, IndefiniteError> {
        Ok(ChannelSampler {
            mu: stats.mu.clone(),
            factor: numeric::hermitian_psd_factor(&stats.nlos_cov, PSD_TOLERANCE)?,
        })
    }

    /// Draw `h = mu + F z` with `z` a unit circularly-symmetric Gaussian
    /// vector (independent real and imaginary parts of variance 1/2).
    pub fn sample(&self, rng: &mut impl Rng) -> DVector<Complex64> {
        let n = self.mu.len();
        let z = DVector::from_fn(n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        &self.mu + &self.factor * z
    }
}

/// One-shot draw from a link's distribution; factors the covariance each
/// call, so hot loops should hold a [`ChannelSampler`] instead.
pub fn sample_channel(
    stats: &LinkStatistics,
    rng: &mut impl Rng,
) -> Result<ChannelSample, IndefiniteError> {
    Ok(ChannelSample {
        h: ChannelSampler::new(stats)?.sample(rng),
    })
}
