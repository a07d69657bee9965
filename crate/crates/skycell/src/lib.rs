//! Desk-scale simulator and optimizer for the downlink of an integrated
//! satellite + UAV cell-free massive MIMO network.
//!
//! A swarm of `L` multi-antenna UAVs and one `N`-antenna LEO satellite
//! jointly serve `K` single-antenna ground users with maximum-ratio
//! precoding. The crate computes closed-form per-user spectral efficiency
//! (SE) from channel statistics alone, prices the UAV layer's power draw,
//! and maximizes the resulting energy efficiency (EE, summed SE per watt)
//! over the UAV power coefficients with a successive convex approximation
//! (SCA) loop whose subproblems are small second-order cone programs.
//! Every closed-form expectation is cross-checked by an independent Monte
//! Carlo sampling oracle.
//!
//! Module map, roughly bottom-up:
//!
//! * [`numeric`] — Gauss–Hermite quadrature, Hermitian PSD factorization.
//! * [`scenario`] — configuration, presets, placement, link geometry.
//! * [`channel`] — per-link Rician statistics and channel sampling.
//! * [`moments`] — closed-form precoding moments feeding the SINR.
//! * [`performance`] — SINR/SE/power/EE evaluation for an allocation.
//! * [`allocation`] — fractional/equal power baselines and the feasible
//!   starting point for the optimizer.
//! * [`conic`] — solver-neutral conic subproblem form and its solution.
//! * [`sca`] — surrogates, subproblem assembly, and the optimizer loop.
//! * [`montecarlo`] — the sampling oracle for moments and SE.
//! * [`experiments`] — seeded experiment runners emitting CSV tables.
//!
//! Conventions: distances in meters, powers in watts, `f_c` in GHz,
//! bandwidth in Hz, elevation angles in degrees, array angles in radians.
//! All randomness flows from one scenario seed through fixed, documented
//! stream offsets, so every result is bit-reproducible regardless of
//! thread count.

pub mod allocation;
pub mod channel;
pub mod conic;
pub mod experiments;
pub mod moments;
pub mod montecarlo;
pub mod numeric;
pub mod performance;
pub mod scenario;
pub mod sca;

/// Fixed stream offsets applied to the scenario seed, one per purpose, so
/// adding draws to one stage never perturbs another.
pub mod streams {
    /// Ground-user placement.
    pub const GEOMETRY: u64 = 0;
    /// Shadow-fading draws of the link statistics.
    pub const SHADOWING: u64 = 1;
    /// Random-search power initialization.
    pub const INIT: u64 = 2;
    /// First Monte Carlo chunk; chunk `c` uses `MC_BASE + c`.
    pub const MC_BASE: u64 = 1 << 32;
}

pub use scenario::{Mode, ScenarioConfig};
