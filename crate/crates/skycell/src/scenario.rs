//! Scenario configuration and network geometry: where the UAVs, ground
//! users, and the satellite sit, and the distances/angles between them.
//!
//! Everything downstream (channel statistics, moments, optimization) is a
//! deterministic function of a [`ScenarioConfig`] plus a seed, so this module
//! is the single source of truth for units and layout conventions:
//! distances in meters, powers in watts, angles in degrees for elevation and
//! radians for array angles, carrier frequency in GHz, bandwidth in Hz.

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Which layers actively transmit during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Satellite and UAVs cooperate.
    #[serde(rename = "NTN_TN")]
    NtnTn,
    /// UAVs only; satellite powers are forced to zero.
    #[serde(rename = "TN_ONLY")]
    TnOnly,
    /// Satellite only; UAV powers are forced to zero.
    #[serde(rename = "NTN_ONLY")]
    NtnOnly,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::NtnTn => "NTN_TN",
            Mode::TnOnly => "TN_ONLY",
            Mode::NtnOnly => "NTN_ONLY",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "NTN_TN" => Ok(Mode::NtnTn),
            "TN_ONLY" => Ok(Mode::TnOnly),
            "NTN_ONLY" => Ok(Mode::NtnOnly),
            other => Err(format!(
                "unknown mode `{other}` (expected NTN_TN, TN_ONLY, or NTN_ONLY)"
            )),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full description of one simulated deployment.
///
/// The struct doubles as the on-disk config format: a flat TOML file whose
/// keys are exactly the serialized field names below. Unknown keys are
/// rejected so typos cannot silently fall back to defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Side of the square coverage area, in meters.
    pub area_side: f64,
    /// Number of UAVs acting as aerial access points.
    #[serde(rename = "L")]
    pub num_uavs: usize,
    /// Number of single-antenna ground users.
    #[serde(rename = "K")]
    pub num_gus: usize,
    /// Antennas per UAV (uniform linear array).
    #[serde(rename = "M")]
    pub uav_antennas: usize,
    /// Satellite antennas (uniform linear array).
    #[serde(rename = "N")]
    pub sat_antennas: usize,
    /// UAV hovering altitude, in meters.
    pub uav_altitude: f64,
    /// Satellite orbit altitude, in meters.
    pub sat_altitude: f64,
    /// Downlink power budget per UAV, in watts.
    #[serde(rename = "P_ap_dl")]
    pub p_ap_dl: f64,
    /// Downlink power budget at the satellite, in watts.
    #[serde(rename = "P_sn_dl")]
    pub p_sn_dl: f64,
    /// Signal-processing power per UAV antenna, in watts.
    #[serde(rename = "P_dsp")]
    pub p_dsp: f64,
    /// Hovering power per UAV, in watts.
    #[serde(rename = "P_hov")]
    pub p_hov: f64,
    /// Power-amplifier efficiency, in (0, 1].
    pub amp_efficiency: f64,
    /// Carrier frequency, in GHz (the path-loss formulas expect GHz).
    pub f_c: f64,
    /// Transmission bandwidth, in Hz.
    pub bandwidth: f64,
    /// Receiver noise figure at the ground users, in dB.
    pub noise_figure_gu: f64,
    /// Angular standard deviation of local scattering for UAV links, radians.
    pub asd: f64,
    /// Angular standard deviation for the satellite links, radians.
    pub asd_sat: f64,
    /// Shadow-fading standard deviation on UAV links, in dB.
    pub shadow_std_uav: f64,
    /// Shadow-fading standard deviation on satellite links, in dB.
    pub shadow_std_sat: f64,
    /// Line-of-sight probability constant `a` (environment specific).
    pub los_a: f64,
    /// Line-of-sight probability constant `b` (environment specific).
    pub los_b: f64,
    /// Minimum spectral efficiency per ground user, in bit/s/Hz.
    pub se_min: f64,
    /// Fractional power allocation exponent (nu = -1 is equal power).
    pub fpa_exponent: f64,
    /// Relative-change stopping threshold of the optimizer loop.
    pub sca_epsilon: f64,
    /// Iteration cap of the optimizer loop.
    pub sca_max_iters: usize,
    /// Number of equally spaced grid points used by the random-search
    /// initializer, over [0, P_ap_dl] per coefficient.
    pub rs_grid: usize,
    /// Default Monte Carlo trial count for validation runs.
    pub mc_trials: usize,
    /// Base seed; experiment runners offset it per scenario.
    pub rng_seed: u64,
    /// Which layers transmit.
    pub mode: Mode,
}

/// Configuration or config-file failure.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("configuration field `{field}` {reason}")]
    Invalid {
        field: &'static str,
        reason: String,
    },
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config file: {0}")]
    Parse(#[from] toml::de::Error),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

impl ScenarioConfig {
    /// Small deployment sized so that every experiment and oracle runs in
    /// seconds on one machine: 6 UAVs, 4 ground users, 2 antennas per UAV,
    /// 8 satellite antennas, over a 1 km square.
    pub fn desk() -> Self {
        ScenarioConfig {
            area_side: 1000.0,
            num_uavs: 6,
            num_gus: 4,
            uav_antennas: 2,
            sat_antennas: 8,
            uav_altitude: 50.0,
            sat_altitude: 550e3,
            p_ap_dl: 1.0,
            p_sn_dl: 10.0,
            p_dsp: 0.1,
            p_hov: 50.0,
            amp_efficiency: 0.8,
            f_c: 6.0,
            bandwidth: 20e6,
            noise_figure_gu: 1.2,
            asd: 10.0_f64.to_radians(),
            asd_sat: 2.0_f64.to_radians(),
            shadow_std_uav: 6.0,
            shadow_std_sat: 4.0,
            los_a: 5.0,
            los_b: 0.05,
            se_min: 0.2,
            fpa_exponent: -1.0,
            sca_epsilon: 1e-3,
            sca_max_iters: 100,
            rs_grid: 100,
            mc_trials: 20_000,
            rng_seed: 1,
            mode: Mode::NtnTn,
        }
    }

    /// Full-size deployment (60 UAVs with 4 antennas each, 40 ground users,
    /// 100 satellite antennas over a 4 km square). Runnable but slow; meant
    /// for qualitative comparison only.
    pub fn full_scale() -> Self {
        ScenarioConfig {
            area_side: 4000.0,
            num_uavs: 60,
            num_gus: 40,
            uav_antennas: 4,
            sat_antennas: 100,
            ..Self::desk()
        }
    }

    /// Look a preset up by name: `desk` is the fast default, `paper` the
    /// full-size deployment.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "desk" => Some(Self::desk()),
            "paper" => Some(Self::full_scale()),
            _ => None,
        }
    }

    /// Downlink noise power at a ground user, in watts:
    /// thermal density -174 dBm/Hz over `bandwidth`, plus the noise figure.
    pub fn noise_power_w(&self) -> f64 {
        let dbm = -174.0 + 10.0 * self.bandwidth.log10() + self.noise_figure_gu;
        10f64.powf((dbm - 30.0) / 10.0)
    }

    /// Fixed (transmit-independent) power of the UAV layer, in watts.
    pub fn fixed_power_w(&self) -> f64 {
        self.num_uavs as f64 * (self.uav_antennas as f64 * self.p_dsp + self.p_hov)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.area_side > 0.0) {
            return Err(invalid("area_side", "must be positive"));
        }
        if self.num_uavs < 1 {
            return Err(invalid("L", "needs at least one UAV"));
        }
        if self.num_gus < 1 {
            return Err(invalid("K", "needs at least one ground user"));
        }
        if self.uav_antennas < 1 {
            return Err(invalid("M", "needs at least one antenna"));
        }
        if self.sat_antennas < 1 {
            return Err(invalid("N", "needs at least one antenna"));
        }
        if !(self.uav_altitude > 0.0) {
            return Err(invalid("uav_altitude", "must be positive"));
        }
        if !(self.sat_altitude > 0.0) {
            return Err(invalid("sat_altitude", "must be positive"));
        }
        for (field, v) in [
            ("P_ap_dl", self.p_ap_dl),
            ("P_sn_dl", self.p_sn_dl),
            ("P_dsp", self.p_dsp),
            ("P_hov", self.p_hov),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid_power(field));
            }
        }
        if !(self.amp_efficiency > 0.0 && self.amp_efficiency <= 1.0) {
            return Err(invalid("amp_efficiency", "must lie in (0, 1]"));
        }
        if !(self.f_c > 0.0) {
            return Err(invalid("f_c", "must be positive (GHz)"));
        }
        if !(self.bandwidth > 0.0) {
            return Err(invalid("bandwidth", "must be positive (Hz)"));
        }
        if !(self.asd >= 0.0) || !(self.asd_sat >= 0.0) {
            return Err(invalid("asd", "angular spreads must be nonnegative"));
        }
        if !(self.shadow_std_uav >= 0.0) || !(self.shadow_std_sat >= 0.0) {
            return Err(invalid("shadow_std_uav", "shadow deviations must be nonnegative"));
        }
        if !(self.los_a > 0.0) || !(self.los_b > 0.0) {
            return Err(invalid("los_a", "line-of-sight constants must be positive"));
        }
        if !(self.se_min >= 0.0) {
            return Err(invalid("se_min", "must be nonnegative"));
        }
        if !self.fpa_exponent.is_finite() {
            return Err(invalid("fpa_exponent", "must be finite"));
        }
        if !(self.sca_epsilon > 0.0) {
            return Err(invalid("sca_epsilon", "must be positive"));
        }
        if self.sca_max_iters < 1 {
            return Err(invalid("sca_max_iters", "needs at least one iteration"));
        }
        if self.rs_grid < 2 {
            return Err(invalid("rs_grid", "needs at least two grid points"));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Canonical TOML rendering; the config hash is taken over these bytes.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// Short hex digest (first 12 hex characters of the SHA-256 of the
    /// canonical TOML) identifying the exact configuration; carried in
    /// every output row so tables remain self-describing.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_toml().as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }
}

fn invalid_power(field: &'static str) -> ConfigError {
    invalid(field, "must be a finite nonnegative power in watts")
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// Geometric relation between two endpoints that the model cannot accept.
#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("elevation angle undefined for coincident points")]
    CoincidentPoints,
    #[error("transmitter must sit strictly above the receiver")]
    TransmitterNotAbove,
}

/// Immutable snapshot of all node positions plus the derived link geometry.
#[derive(Debug, Clone)]
pub struct Geometry {
    /// UAV positions, meters; a deterministic rectangular grid at altitude.
    pub uav_positions: Vec<Vector3<f64>>,
    /// Ground-user positions, meters (z = 0).
    pub gu_positions: Vec<Vector3<f64>>,
    /// Satellite position, meters; above the area center.
    pub sat_position: Vector3<f64>,
    /// UAV-to-user distances, meters (L x K).
    pub d_lk: DMatrix<f64>,
    /// Satellite-to-user distances, meters (length K).
    pub d_k: Vec<f64>,
    /// UAV-link elevation angles, degrees (L x K).
    pub theta_lk: DMatrix<f64>,
    /// Satellite-link elevation angles, degrees (length K).
    pub theta_k: Vec<f64>,
    /// Nominal angles of arrival for the UAV arrays, radians (L x K);
    /// the link's elevation angle.
    pub aoa_lk: DMatrix<f64>,
    /// Nominal angles of arrival for the satellite array, radians (length
    /// K); the user's azimuth about the area center, since elevation is
    /// degenerate at orbital distance.
    pub aoa_k: Vec<f64>,
}

/// Elevation angle, in degrees, of the transmitter as seen from the
/// receiver: arcsin(altitude difference / distance), in [0, 90].
///
/// The transmitter must sit strictly above the receiver; coincident points
/// are rejected because the angle is undefined there.
pub fn elevation_angle(
    p_rx: &Vector3<f64>,
    p_tx: &Vector3<f64>,
) -> Result<f64, GeometryError> {
    let diff = p_tx - p_rx;
    let d = diff.norm();
    if d == 0.0 {
        return Err(GeometryError::CoincidentPoints);
    }
    if diff.z <= 0.0 {
        return Err(GeometryError::TransmitterNotAbove);
    }
    Ok((diff.z / d).asin().to_degrees())
}

/// Factor L as rows x cols with rows <= cols and the smallest difference,
/// e.g. 6 -> 2 x 3, 9 -> 3 x 3, 7 -> 1 x 7.
fn grid_shape(l: usize) -> (usize, usize) {
    let mut rows = (l as f64).sqrt().floor() as usize;
    while rows > 1 && l % rows != 0 {
        rows -= 1;
    }
    (rows.max(1), l / rows.max(1))
}

/// UAV grid over the square: the area is split into rows x cols equal cells
/// and one UAV hovers at each cell center.
pub fn uav_grid(config: &ScenarioConfig) -> Vec<Vector3<f64>> {
    let (rows, cols) = grid_shape(config.num_uavs);
    let cell_w = config.area_side / cols as f64;
    let cell_h = config.area_side / rows as f64;
    let mut positions = Vec::with_capacity(config.num_uavs);
    for row in 0..rows {
        for col in 0..cols {
            positions.push(Vector3::new(
                (col as f64 + 0.5) * cell_w,
                (row as f64 + 0.5) * cell_h,
                config.uav_altitude,
            ));
        }
    }
    positions
}

/// Assemble the full geometry from explicit ground-user positions.
///
/// Exposed separately from [`build_geometry`] so tests and experiments can
/// place users deterministically; the satellite always sits above the area
/// center and UAVs on their grid.
pub fn geometry_from_positions(
    config: &ScenarioConfig,
    gu_positions: Vec<Vector3<f64>>,
) -> Result<Geometry, ConfigError> {
    config.validate()?;
    if gu_positions.len() != config.num_gus {
        return Err(invalid("K", "ground-user position count must match K"));
    }
    let uav_positions = uav_grid(config);
    let sat_position = Vector3::new(
        config.area_side / 2.0,
        config.area_side / 2.0,
        config.sat_altitude,
    );

    let l = config.num_uavs;
    let k = config.num_gus;
    let mut d_lk = DMatrix::zeros(l, k);
    let mut theta_lk = DMatrix::zeros(l, k);
    let mut aoa_lk = DMatrix::zeros(l, k);
    for (li, uav) in uav_positions.iter().enumerate() {
        for (ki, gu) in gu_positions.iter().enumerate() {
            let d = (uav - gu).norm();
            let theta = elevation_angle(gu, uav).expect("UAVs hover strictly above ground");
            d_lk[(li, ki)] = d;
            theta_lk[(li, ki)] = theta;
            // The arrays are steered by the link's elevation; azimuth is
            // absorbed into the nominal angle-of-arrival convention.
            aoa_lk[(li, ki)] = theta.to_radians();
        }
    }

    let mut d_k = Vec::with_capacity(k);
    let mut theta_k = Vec::with_capacity(k);
    let mut aoa_k = Vec::with_capacity(k);
    for gu in &gu_positions {
        let d = (sat_position - gu).norm();
        let theta = elevation_angle(gu, &sat_position).expect("satellite is above ground");
        d_k.push(d);
        theta_k.push(theta);
        // The satellite's array coordinate: elevation is ~90 degrees for
        // every user (the area subtends microdegrees from 550 km), so it
        // cannot tell users apart. The array resolves them by azimuth
        // about the area center instead; without this the satellite layer
        // would beam identically at everyone and only add interference.
        aoa_k.push((gu.y - sat_position.y).atan2(gu.x - sat_position.x));
    }

    Ok(Geometry {
        uav_positions,
        gu_positions,
        sat_position,
        d_lk,
        d_k,
        theta_lk,
        theta_k,
        aoa_lk,
        aoa_k,
    })
}

/// Place ground users i.i.d. uniformly over the square and derive all link
/// geometry. Same config and RNG state give a bit-identical result.
pub fn build_geometry(
    config: &ScenarioConfig,
    rng: &mut impl Rng,
) -> Result<Geometry, ConfigError> {
    config.validate()?;
    let gu_positions = (0..config.num_gus)
        .map(|_| {
            Vector3::new(
                rng.random::<f64>() * config.area_side,
                rng.random::<f64>() * config.area_side,
                0.0,
            )
        })
        .collect();
    geometry_from_positions(config, gu_positions)
}
