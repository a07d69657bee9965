//! Seeded experiment runners and tabular result emission.
//!
//! Three figure-style experiments (per-user SE distribution, efficiency
//! versus UAV count, efficiency versus user count) plus a closed-form
//! versus Monte Carlo validation command. Each runner maps a scenario
//! configuration and an explicit seed list to a table whose CSV rendering
//! is byte-deterministic: seeds fan out across workers, per-seed results
//! are assembled in seed order, and floats print in shortest round-trip
//! form with no locale dependence. Every row carries the configuration
//! hash and the seed that produced it.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::allocation::{self, AllocationError, InitMethod};
use crate::channel::{self, ScenarioStatistics};
use crate::moments::{assemble_moments, MomentMode, PrecodingMoments};
use crate::montecarlo;
use crate::numeric::IndefiniteError;
use crate::performance::{self, PowerAllocation};
use crate::sca::{self, ScaError, ScaOutcome, ScaTermination};
use crate::scenario::{self, ConfigError, Mode, ScenarioConfig};
use crate::streams;

/// Satellite downlink powers swept by the SE-distribution experiment, W.
pub const DEFAULT_PSN_W: [f64; 3] = [10.0, 50.0, 100.0];

/// UAV counts swept by the efficiency-versus-UAVs experiment.
pub const DEFAULT_UAV_SWEEP: [usize; 5] = [4, 6, 8, 12, 16];

/// User counts swept by the efficiency-versus-users experiment.
pub const DEFAULT_GU_SWEEP: [usize; 4] = [2, 4, 6, 8];

/// Validation flags an entry when it sits more than this many MC standard
/// errors from the closed form.
pub const VALIDATE_Z_LIMIT: f64 = 3.0;

/// Fraction of entries allowed beyond the limit: the ~1% two-sided rounding
/// of the 3-sigma tail, widened by a slack factor of 3.
pub const VALIDATE_ALLOWED_FRACTION: f64 = 0.01 * 3.0;

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// Failures bubbling out of an experiment run.
#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
    #[error(transparent)]
    Sca(#[from] ScaError),
    #[error("channel statistics not positive semidefinite: {0}")]
    Moments(#[from] IndefiniteError),
    #[error("cannot write results: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot serialize metadata: {0}")]
    Meta(#[from] serde_json::Error),
}

/// Seed list for `n` scenario drops: `rng_seed, rng_seed + 1, ...`.
pub fn seed_list(config: &ScenarioConfig, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| config.rng_seed + i).collect()
}

/// First 12 hex characters of the SHA-256 of the canonical TOML rendering;
/// stamped onto every output row.
pub fn config_hash(config: &ScenarioConfig) -> String {
    config.config_hash()
}

/// Draws geometry and per-link statistics for one seed.
pub fn realize(
    config: &ScenarioConfig,
    seed: u64,
) -> Result<ScenarioStatistics, ExperimentError> {
    let mut geo_rng = ChaCha8Rng::seed_from_u64(seed);
    geo_rng.set_stream(streams::GEOMETRY);
    let geometry = scenario::build_geometry(config, &mut geo_rng)?;
    let mut shadow_rng = ChaCha8Rng::seed_from_u64(seed);
    shadow_rng.set_stream(streams::SHADOWING);
    Ok(channel::scenario_statistics(&geometry, config, &mut shadow_rng))
}

/// One energy-efficiency-maximizing optimization run.
#[derive(Debug, Clone)]
pub struct EemRun {
    /// Feasible starting allocation handed to the optimizer.
    pub init: PowerAllocation,
    /// Closed-form efficiency of the start, bit/s/Hz/W.
    pub init_ee: f64,
    /// Which candidate start won, e.g. `random_search(attempts=2)` or
    /// `fpa(0.5)`; `none` when the mode leaves nothing to optimize.
    pub init_label: String,
    /// Optimizer result (best allocation, report, trace, termination).
    pub outcome: ScaOutcome,
}

/// True when the allocation meets budgets and the QoS floor under the
/// configured mode.
fn feasible_start(
    alloc: &PowerAllocation,
    moments: &PrecodingMoments,
    config: &ScenarioConfig,
) -> bool {
    let eff = alloc.effective(config.mode);
    if eff.check_budgets(moments, config).is_err() {
        return false;
    }
    let noise = config.noise_power_w();
    (0..moments.num_gus()).all(|k| {
        performance::se_dl(performance::sinr_dl(k, &eff, moments, noise)) >= config.se_min
    })
}

/// Runs the efficiency-maximizing allocation for one realized scenario.
///
/// The optimizer is a local method, so its start matters: the random
/// search of the published initialization stops at the *first* feasible
/// draw, which on some drops sits in a worse basin than the fractional
/// baselines. The start handed to the optimizer is therefore the most
/// efficient QoS-feasible candidate among the random-search draw and the
/// fractional family; best-iterate tracking then guarantees the result
/// dominates every feasible baseline. Satellite-only mode skips the
/// optimizer outright: UAV powers are forced to zero and the frozen
/// equal-power satellite split leaves an empty decision space.
pub fn optimize_eem(
    config: &ScenarioConfig,
    moments: &PrecodingMoments,
    seed: u64,
) -> Result<EemRun, ExperimentError> {
    if config.mode == Mode::NtnOnly {
        let alloc = allocation::epa(config, moments)?.effective(Mode::NtnOnly);
        let report = performance::energy_efficiency(&alloc, moments, config);
        let init_ee = report.ee;
        return Ok(EemRun {
            init: alloc.clone(),
            init_ee,
            init_label: "none".to_owned(),
            outcome: ScaOutcome {
                alloc,
                report,
                trace: vec![init_ee],
                termination: ScaTermination::Converged { iters: 0 },
            },
        });
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    init_rng.set_stream(streams::INIT);
    let (rs_init, method) = allocation::random_search_init(config, moments, &mut init_rng)?;
    let rs_label = match method {
        InitMethod::RandomSearch { attempts } => format!("random_search(attempts={attempts})"),
        InitMethod::EpaFallback => "epa_fallback".to_owned(),
    };
    let mut candidates: Vec<(String, PowerAllocation)> = vec![(rs_label, rs_init)];
    for nu in [-1.0, -0.5, 0.0, 0.5] {
        if let Ok(alloc) = allocation::fpa(config, moments, nu) {
            candidates.push((format!("fpa({nu})"), alloc));
        }
    }
    let mut best: Option<(String, PowerAllocation, f64)> = None;
    for (label, alloc) in candidates {
        if !feasible_start(&alloc, moments, config) {
            continue;
        }
        let ee = performance::energy_efficiency(&alloc, moments, config).ee;
        if best.as_ref().is_none_or(|(_, _, b)| ee > *b) {
            best = Some((label, alloc, ee));
        }
    }
    // The random-search draw is feasible by construction, so a winner
    // always exists.
    let (init_label, init, init_ee) = best.expect("random search start is feasible");
    let outcome = sca::sca_solve(config, moments, &init)?;
    Ok(EemRun {
        init,
        init_ee,
        init_label,
        outcome,
    })
}

/// Shortest round-trip decimal rendering, '.' decimal point always.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Median of a non-empty sample (average of the middle pair).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Mean and sample standard deviation (n-1 denominator, 0 for one value).
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

// ---------------------------------------------------------------------------
// SE distribution (per-user SE samples across modes and satellite powers)
// ---------------------------------------------------------------------------

/// Options for [`run_cdf`].
#[derive(Debug, Clone)]
pub struct CdfOptions {
    /// Network modes emitted, in order.
    pub modes: Vec<Mode>,
    /// Satellite downlink powers swept, W.
    pub psn_w: Vec<f64>,
    /// Monte Carlo trials per cell for the optional CF/MC pairing; 0 emits
    /// closed-form columns only.
    pub mc_trials: usize,
    /// Moment evaluation variant for the closed form.
    pub moment_mode: MomentMode,
}

impl Default for CdfOptions {
    fn default() -> Self {
        Self {
            modes: vec![Mode::NtnTn, Mode::TnOnly, Mode::NtnOnly],
            psn_w: DEFAULT_PSN_W.to_vec(),
            mc_trials: 0,
            moment_mode: MomentMode::ExactGaussian,
        }
    }
}

/// One per-user SE sample under the efficiency-maximizing allocation.
#[derive(Debug, Clone)]
pub struct CdfRow {
    pub seed: u64,
    pub mode: Mode,
    pub p_sn_w: f64,
    pub gu: usize,
    /// Closed-form hardening-bound SE, bit/s/Hz.
    pub se_cf: f64,
    /// Monte Carlo estimate, present when trials were requested.
    pub se_mc: Option<f64>,
    pub se_mc_stderr: Option<f64>,
}

/// Per-user SE table across (mode, satellite power) cells.
#[derive(Debug, Clone)]
pub struct CdfTable {
    pub config_hash: String,
    pub rows: Vec<CdfRow>,
}

impl CdfTable {
    /// CSV rendering with a single header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "config_hash,seed,mode,p_sn_w,gu,se_cf,se_mc,se_mc_stderr\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.config_hash,
                r.seed,
                r.mode.as_str(),
                fmt_f64(r.p_sn_w),
                r.gu,
                fmt_f64(r.se_cf),
                fmt_opt(r.se_mc),
                fmt_opt(r.se_mc_stderr),
            ));
        }
        out
    }

    /// All closed-form SE samples in one (mode, satellite power) cell.
    pub fn cell_se(&self, mode: Mode, p_sn_w: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.mode == mode && r.p_sn_w == p_sn_w)
            .map(|r| r.se_cf)
            .collect()
    }
}

/// Per-user SE distribution under the efficiency-maximizing allocation,
/// across modes and satellite powers. One row per (seed, mode, power, user).
pub fn run_cdf(
    config: &ScenarioConfig,
    seeds: &[u64],
    opts: &CdfOptions,
) -> Result<CdfTable, ExperimentError> {
    let hash = config_hash(config);
    let per_seed: Vec<Vec<CdfRow>> = seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<CdfRow>, ExperimentError> {
            let stats = realize(config, seed)?;
            let moments = assemble_moments(&stats.uav, &stats.sat, opts.moment_mode)?;
            let mut rows = Vec::new();
            for &mode in &opts.modes {
                for &psn in &opts.psn_w {
                    let mut cell = config.clone();
                    cell.mode = mode;
                    cell.p_sn_dl = psn;
                    let run = optimize_eem(&cell, &moments, seed)?;
                    let mc = if opts.mc_trials > 0 {
                        Some(montecarlo::estimate_se(
                            &cell,
                            &stats.uav,
                            &stats.sat,
                            &run.outcome.alloc,
                            opts.mc_trials,
                            seed,
                        )?)
                    } else {
                        None
                    };
                    for k in 0..cell.num_gus {
                        rows.push(CdfRow {
                            seed,
                            mode,
                            p_sn_w: psn,
                            gu: k,
                            se_cf: run.outcome.report.se[k],
                            se_mc: mc.as_ref().map(|m| m.se[k]),
                            se_mc_stderr: mc.as_ref().map(|m| m.se_stderr[k]),
                        });
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<_, _>>()?;
    Ok(CdfTable {
        config_hash: hash,
        rows: per_seed.into_iter().flatten().collect(),
    })
}

// ---------------------------------------------------------------------------
// Efficiency sweeps (vs UAV count, vs user count)
// ---------------------------------------------------------------------------

/// Power-allocation strategy compared in the sweep experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Successive-convex-approximation efficiency maximization.
    Eem,
    /// Equal power split (fractional allocation with exponent -1).
    Epa,
    /// Fractional allocation with the given exponent.
    Fpa { nu: f64 },
}

impl Strategy {
    /// Stable text label used in CSV output.
    pub fn label(self) -> String {
        match self {
            Strategy::Eem => "EEM".to_owned(),
            Strategy::Epa => "EPA".to_owned(),
            Strategy::Fpa { nu } => format!("FPA({nu})"),
        }
    }
}

/// Strategy set swept by both efficiency experiments, in emission order.
pub fn sweep_strategies() -> Vec<Strategy> {
    vec![
        Strategy::Eem,
        Strategy::Epa,
        Strategy::Fpa { nu: -0.5 },
        Strategy::Fpa { nu: 0.0 },
        Strategy::Fpa { nu: 0.5 },
    ]
}

/// One (seed, sweep point, strategy) efficiency sample.
#[derive(Debug, Clone)]
pub struct EeDetailRow {
    pub seed: u64,
    /// Sweep coordinate (UAV count or user count).
    pub x: usize,
    pub strategy: Strategy,
    /// Closed-form energy efficiency, bit/s/Hz/W.
    pub ee: f64,
}

/// Seed-aggregated efficiency at one sweep point.
#[derive(Debug, Clone)]
pub struct EeSummaryRow {
    pub x: usize,
    pub strategy: Strategy,
    pub mean_ee: f64,
    pub std_ee: f64,
    pub num_seeds: usize,
}

/// Result of an efficiency sweep: per-seed detail plus per-point summary.
#[derive(Debug, Clone)]
pub struct EeTable {
    pub config_hash: String,
    /// CSV column name of the sweep coordinate.
    pub axis: &'static str,
    pub detail: Vec<EeDetailRow>,
    pub summary: Vec<EeSummaryRow>,
    pub seed_lo: u64,
    pub seed_hi: u64,
}

impl EeTable {
    /// Aggregated CSV: one row per (sweep point, strategy).
    pub fn summary_csv(&self) -> String {
        let mut out = format!(
            "config_hash,{},strategy,mean_ee,std_ee,num_seeds,seed_lo,seed_hi\n",
            self.axis
        );
        for r in &self.summary {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.config_hash,
                r.x,
                r.strategy.label(),
                fmt_f64(r.mean_ee),
                fmt_f64(r.std_ee),
                r.num_seeds,
                self.seed_lo,
                self.seed_hi,
            ));
        }
        out
    }

    /// Per-seed CSV: one row per (seed, sweep point, strategy).
    pub fn detail_csv(&self) -> String {
        let mut out = format!("config_hash,seed,{},strategy,ee\n", self.axis);
        for r in &self.detail {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.config_hash,
                r.seed,
                r.x,
                r.strategy.label(),
                fmt_f64(r.ee),
            ));
        }
        out
    }

    /// Mean efficiency at one sweep point for one strategy.
    pub fn mean_ee(&self, x: usize, strategy: Strategy) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.x == x && r.strategy == strategy)
            .map(|r| r.mean_ee)
    }
}

/// Shared sweep core: `apply` rewrites one config field per sweep value.
fn run_sweep(
    config: &ScenarioConfig,
    axis: &'static str,
    values: &[usize],
    seeds: &[u64],
    moment_mode: MomentMode,
    apply: fn(&mut ScenarioConfig, usize),
) -> Result<EeTable, ExperimentError> {
    let hash = config_hash(config);
    let strategies = sweep_strategies();
    let cells: Vec<(usize, u64)> = values
        .iter()
        .flat_map(|&x| seeds.iter().map(move |&s| (x, s)))
        .collect();
    let mut detail: Vec<EeDetailRow> = cells
        .par_iter()
        .map(|&(x, seed)| -> Result<Vec<EeDetailRow>, ExperimentError> {
            let mut cfg = config.clone();
            apply(&mut cfg, x);
            cfg.validate()?;
            let stats = realize(&cfg, seed)?;
            let moments = assemble_moments(&stats.uav, &stats.sat, moment_mode)?;
            let mut rows = Vec::with_capacity(strategies.len());
            for &strategy in &strategies {
                let ee = match strategy {
                    Strategy::Eem => optimize_eem(&cfg, &moments, seed)?.outcome.report.ee,
                    Strategy::Epa => {
                        let alloc = allocation::epa(&cfg, &moments)?;
                        performance::energy_efficiency(&alloc, &moments, &cfg).ee
                    }
                    Strategy::Fpa { nu } => {
                        let alloc = allocation::fpa(&cfg, &moments, nu)?;
                        performance::energy_efficiency(&alloc, &moments, &cfg).ee
                    }
                };
                rows.push(EeDetailRow { seed, x, strategy, ee });
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    let strategy_rank =
        |s: Strategy| strategies.iter().position(|&t| t == s).unwrap();
    detail.sort_by(|a, b| {
        (a.x, a.seed, strategy_rank(a.strategy)).cmp(&(b.x, b.seed, strategy_rank(b.strategy)))
    });

    let mut summary = Vec::with_capacity(values.len() * strategies.len());
    for &x in values {
        for &strategy in &strategies {
            let sample: Vec<f64> = detail
                .iter()
                .filter(|r| r.x == x && r.strategy == strategy)
                .map(|r| r.ee)
                .collect();
            let (mean_ee, std_ee) = mean_std(&sample);
            summary.push(EeSummaryRow {
                x,
                strategy,
                mean_ee,
                std_ee,
                num_seeds: sample.len(),
            });
        }
    }
    Ok(EeTable {
        config_hash: hash,
        axis,
        detail,
        summary,
        seed_lo: seeds.iter().copied().min().unwrap_or(0),
        seed_hi: seeds.iter().copied().max().unwrap_or(0),
    })
}

/// Mean energy efficiency versus UAV count, per strategy.
pub fn run_ee_vs_uavs(
    config: &ScenarioConfig,
    uav_counts: &[usize],
    seeds: &[u64],
    moment_mode: MomentMode,
) -> Result<EeTable, ExperimentError> {
    run_sweep(config, "num_uavs", uav_counts, seeds, moment_mode, |c, x| {
        c.num_uavs = x;
    })
}

/// Mean energy efficiency versus user count, per strategy.
pub fn run_ee_vs_gus(
    config: &ScenarioConfig,
    gu_counts: &[usize],
    seeds: &[u64],
    moment_mode: MomentMode,
) -> Result<EeTable, ExperimentError> {
    run_sweep(config, "num_gus", gu_counts, seeds, moment_mode, |c, x| {
        c.num_gus = x;
    })
}

// ---------------------------------------------------------------------------
// Closed-form versus Monte Carlo validation
// ---------------------------------------------------------------------------

/// Options for [`run_validate`].
#[derive(Debug, Clone)]
pub struct ValidateOptions {
    /// Monte Carlo trials per seed.
    pub mc_trials: usize,
    /// Moment evaluation variant under test.
    pub moment_mode: MomentMode,
}

/// One closed-form/Monte Carlo comparison.
#[derive(Debug, Clone)]
pub struct ValidateRow {
    pub seed: u64,
    /// Quantity family: `se`, `b`, `csq`, `sat_signal`, `sat_fourth`,
    /// `sat_cross`, or `sat_interference`.
    pub kind: &'static str,
    /// Index within the family, e.g. `k=1;i=0;l=3`. Complex quantities
    /// compare by modulus of the difference.
    pub label: String,
    pub cf: f64,
    pub mc: f64,
    pub stderr: f64,
    /// Deviation in MC standard errors.
    pub z: f64,
}

/// Validation verdict across all seeds.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub config_hash: String,
    pub rows: Vec<ValidateRow>,
    pub checked: usize,
    /// Entries farther than [`VALIDATE_Z_LIMIT`] standard errors.
    pub beyond: usize,
    pub observed_fraction: f64,
    pub allowed_fraction: f64,
    /// True when the beyond-limit fraction stays within the allowance.
    pub pass: bool,
}

impl ValidationReport {
    /// CSV rendering with a single header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("config_hash,seed,kind,label,cf,mc,stderr,z\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.config_hash,
                r.seed,
                r.kind,
                r.label,
                fmt_f64(r.cf),
                fmt_f64(r.mc),
                fmt_f64(r.stderr),
                fmt_f64(r.z),
            ));
        }
        out
    }

    /// One-line human summary.
    pub fn summary_line(&self) -> String {
        format!(
            "validation: {} of {} entries beyond {} SE ({:.3}%, allowed {:.3}%) -> {}",
            self.beyond,
            self.checked,
            VALIDATE_Z_LIMIT,
            100.0 * self.observed_fraction,
            100.0 * self.allowed_fraction,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

fn z_score(diff: f64, stderr: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if stderr > 0.0 {
        diff / stderr
    } else {
        f64::INFINITY
    }
}

/// Compares every closed-form quantity against its Monte Carlo estimate
/// under equal power allocation: per-user SE plus all precoding moments.
/// Passes when at most [`VALIDATE_ALLOWED_FRACTION`] of entries deviate by
/// more than [`VALIDATE_Z_LIMIT`] standard errors.
pub fn run_validate(
    config: &ScenarioConfig,
    seeds: &[u64],
    opts: &ValidateOptions,
) -> Result<ValidationReport, ExperimentError> {
    let hash = config_hash(config);
    let per_seed: Vec<Vec<ValidateRow>> = seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<ValidateRow>, ExperimentError> {
            let stats = realize(config, seed)?;
            let moments = assemble_moments(&stats.uav, &stats.sat, opts.moment_mode)?;
            let alloc = allocation::epa(config, &moments)?;
            let report = performance::energy_efficiency(&alloc, &moments, config);
            let mest =
                montecarlo::estimate_moments(&stats.uav, &stats.sat, opts.mc_trials, seed)?;
            let sest = montecarlo::estimate_se(
                config,
                &stats.uav,
                &stats.sat,
                &alloc,
                opts.mc_trials,
                seed,
            )?;
            let num_uavs = moments.num_uavs();
            let num_gus = moments.num_gus();
            let mut rows = Vec::new();
            for k in 0..num_gus {
                let diff = (report.se[k] - sest.se[k]).abs();
                rows.push(ValidateRow {
                    seed,
                    kind: "se",
                    label: format!("k={k}"),
                    cf: report.se[k],
                    mc: sest.se[k],
                    stderr: sest.se_stderr[k],
                    z: z_score(diff, sest.se_stderr[k]),
                });
            }
            for k in 0..num_gus {
                for i in 0..num_gus {
                    for l in 0..num_uavs {
                        let cf = moments.b[k][i][l];
                        let mc = mest.b[k][i][l];
                        let se = mest.b_se[k][i][l];
                        rows.push(ValidateRow {
                            seed,
                            kind: "b",
                            label: format!("k={k};i={i};l={l}"),
                            cf: cf.norm(),
                            mc: mc.norm(),
                            stderr: se,
                            z: z_score((cf - mc).norm(), se),
                        });
                    }
                }
            }
            // Hermitian second-moment matrices: upper triangle only, so no
            // entry is double-counted.
            for k in 0..num_gus {
                for i in 0..num_gus {
                    for m in 0..num_uavs {
                        for n in m..num_uavs {
                            let cf = moments.csq[k][i][(m, n)];
                            let mc = mest.csq[k][i][(m, n)];
                            let se = mest.csq_se[k][i][(m, n)];
                            rows.push(ValidateRow {
                                seed,
                                kind: "csq",
                                label: format!("k={k};i={i};m={m};n={n}"),
                                cf: cf.norm(),
                                mc: mc.norm(),
                                stderr: se,
                                z: z_score((cf - mc).norm(), se),
                            });
                        }
                    }
                }
            }
            for k in 0..num_gus {
                let diff = (moments.sat_signal[k] - mest.sat_signal[k]).abs();
                rows.push(ValidateRow {
                    seed,
                    kind: "sat_signal",
                    label: format!("k={k}"),
                    cf: moments.sat_signal[k],
                    mc: mest.sat_signal[k],
                    stderr: mest.sat_signal_se[k],
                    z: z_score(diff, mest.sat_signal_se[k]),
                });
                let diff = (moments.sat_fourth[k] - mest.sat_fourth[k]).abs();
                rows.push(ValidateRow {
                    seed,
                    kind: "sat_fourth",
                    label: format!("k={k}"),
                    cf: moments.sat_fourth[k],
                    mc: mest.sat_fourth[k],
                    stderr: mest.sat_fourth_se[k],
                    z: z_score(diff, mest.sat_fourth_se[k]),
                });
                let (b_mc, b_se) = mest.sat_interference(k, &alloc.eta_sn);
                let b_cf = moments.sat_interference(k, &alloc.eta_sn);
                rows.push(ValidateRow {
                    seed,
                    kind: "sat_interference",
                    label: format!("k={k}"),
                    cf: b_cf,
                    mc: b_mc,
                    stderr: b_se,
                    z: z_score((b_cf - b_mc).abs(), b_se),
                });
            }
            // Symmetric cross term: unordered pairs only.
            for k in 0..num_gus {
                for i in (k + 1)..num_gus {
                    let cf = moments.sat_cross[(k, i)];
                    let mc = mest.sat_cross[(k, i)];
                    let se = mest.sat_cross_se[(k, i)];
                    rows.push(ValidateRow {
                        seed,
                        kind: "sat_cross",
                        label: format!("k={k};i={i}"),
                        cf,
                        mc,
                        stderr: se,
                        z: z_score((cf - mc).abs(), se),
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<ValidateRow> = per_seed.into_iter().flatten().collect();
    let checked = rows.len();
    let beyond = rows.iter().filter(|r| r.z > VALIDATE_Z_LIMIT).count();
    let observed_fraction = beyond as f64 / checked as f64;
    Ok(ValidationReport {
        config_hash: hash,
        rows,
        checked,
        beyond,
        observed_fraction,
        allowed_fraction: VALIDATE_ALLOWED_FRACTION,
        pass: observed_fraction <= VALIDATE_ALLOWED_FRACTION,
    })
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

/// Sidecar metadata describing one run; serialized as pretty JSON next to
/// the CSV tables.
#[derive(Debug, Serialize)]
pub struct RunMetadata<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_hash: &'a str,
    pub seeds: &'a [u64],
    /// Command-specific knobs (powers swept, trial counts, ...).
    pub parameters: serde_json::Value,
    /// Full resolved configuration.
    pub config: &'a ScenarioConfig,
}

/// Writes the given CSV tables plus `<name>.meta.json` into `dir`,
/// creating it if needed. Returns the paths written.
pub fn write_run(
    dir: &Path,
    name: &str,
    tables: &[(&str, &str)],
    meta: &RunMetadata,
) -> Result<Vec<PathBuf>, ExperimentError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (file, csv) in tables {
        let path = dir.join(file);
        let mut f = std::fs::File::create(&path)?;
        f.write_all(csv.as_bytes())?;
        written.push(path);
    }
    let meta_path = dir.join(format!("{name}.meta.json"));
    let mut f = std::fs::File::create(&meta_path)?;
    let text = serde_json::to_string_pretty(meta)?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    written.push(meta_path);
    Ok(written)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config() -> ScenarioConfig {
        let mut config = ScenarioConfig::desk();
        config.mc_trials = 2_000;
        config
    }

    #[test]
    fn seed_list_offsets_from_config_seed() {
        let config = quick_config();
        let seeds = seed_list(&config, 3);
        assert_eq!(seeds, vec![config.rng_seed, config.rng_seed + 1, config.rng_seed + 2]);
    }

    #[test]
    fn config_hash_tracks_config_content() {
        let config = quick_config();
        let h1 = config_hash(&config);
        assert_eq!(h1.len(), 12);
        assert_eq!(h1, config_hash(&config.clone()));
        let mut other = config.clone();
        other.p_sn_dl += 1.0;
        assert_ne!(h1, config_hash(&other));
    }

    #[test]
    fn median_handles_even_and_odd_lengths() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[5.0]), 5.0);
    }

    #[test]
    fn cdf_emits_one_row_per_user_per_cell() {
        let config = quick_config();
        let opts = CdfOptions {
            psn_w: vec![10.0, 50.0],
            mc_trials: 0,
            ..CdfOptions::default()
        };
        let seeds = seed_list(&config, 1);
        let table = run_cdf(&config, &seeds, &opts).unwrap();
        // 3 modes x 2 powers x K=4 users.
        assert_eq!(table.rows.len(), 3 * 2 * config.num_gus);
        for mode in [Mode::NtnTn, Mode::TnOnly, Mode::NtnOnly] {
            for &psn in &[10.0, 50.0] {
                assert_eq!(table.cell_se(mode, psn).len(), config.num_gus);
            }
        }
        // Satellite-off rows do not depend on the satellite power sweep.
        assert_eq!(
            table.cell_se(Mode::TnOnly, 10.0),
            table.cell_se(Mode::TnOnly, 50.0)
        );
    }

    #[test]
    fn cdf_csv_is_deterministic_across_runs_and_workers() {
        let config = quick_config();
        let opts = CdfOptions {
            psn_w: vec![10.0],
            mc_trials: 2_000,
            ..CdfOptions::default()
        };
        let seeds = seed_list(&config, 2);
        let narrow = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_cdf(&config, &seeds, &opts).unwrap());
        let wide = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_cdf(&config, &seeds, &opts).unwrap());
        assert_eq!(narrow.to_csv(), wide.to_csv());
        let again = run_cdf(&config, &seeds, &opts).unwrap();
        assert_eq!(narrow.to_csv(), again.to_csv());
        assert!(narrow.to_csv().starts_with("config_hash,seed,mode,p_sn_w,gu,se_cf"));
    }

    #[test]
    fn sweep_emits_one_summary_row_per_point_per_strategy() {
        let config = quick_config();
        let seeds = seed_list(&config, 2);
        let table = run_ee_vs_uavs(&config, &[4, 6], &seeds, MomentMode::ExactGaussian).unwrap();
        assert_eq!(table.summary.len(), 2 * sweep_strategies().len());
        assert_eq!(table.detail.len(), 2 * 2 * sweep_strategies().len());
        for row in &table.summary {
            assert_eq!(row.num_seeds, 2);
            assert!(row.mean_ee.is_finite() && row.mean_ee > 0.0);
        }
        // Single point, single seed: exactly one summary row per strategy.
        let single =
            run_ee_vs_gus(&config, &[4], &seeds[..1], MomentMode::ExactGaussian).unwrap();
        assert_eq!(single.summary.len(), sweep_strategies().len());
        assert!(single.summary.iter().all(|r| r.num_seeds == 1));
        // EEM never loses to EPA on any point (same start quality class).
        for row in &table.summary {
            if row.strategy == Strategy::Eem {
                let epa = table.mean_ee(row.x, Strategy::Epa).unwrap();
                assert!(
                    row.mean_ee >= epa * (1.0 - 1e-9),
                    "EEM {} below EPA {epa} at x={}",
                    row.mean_ee,
                    row.x
                );
            }
        }
        let csv = table.summary_csv();
        assert!(csv.starts_with("config_hash,num_uavs,strategy,mean_ee"));
        assert_eq!(csv.lines().count(), 1 + table.summary.len());
    }

    #[test]
    fn validate_passes_on_default_settings() {
        let config = quick_config();
        let opts = ValidateOptions {
            mc_trials: 20_000,
            moment_mode: MomentMode::ExactGaussian,
        };
        let seeds = seed_list(&config, 1);
        let report = run_validate(&config, &seeds, &opts).unwrap();
        assert!(
            report.pass,
            "unexpected validation failure: {}",
            report.summary_line()
        );
        assert_eq!(report.checked, report.rows.len());
        // Census: K + K^2 L (b) + K^2 L(L+1)/2 (csq) + 3K (sat scalars)
        // + K(K-1)/2 (cross), per seed.
        let (l, k) = (config.num_uavs, config.num_gus);
        let expect = k + k * k * l + k * k * (l * (l + 1) / 2) + 3 * k + k * (k - 1) / 2;
        assert_eq!(report.checked, expect);
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 1 + report.rows.len());
    }

    #[test]
    fn validate_flags_elementwise_moments_on_correlated_arrays() {
        // The per-antenna fourth-moment variant ignores antenna correlation;
        // with a 10-degree angular spread the arrays are strongly correlated
        // and the bias must surface as a failed validation.
        let config = quick_config();
        let opts = ValidateOptions {
            mc_trials: 100_000,
            moment_mode: MomentMode::Elementwise,
        };
        let seeds = seed_list(&config, 1);
        let report = run_validate(&config, &seeds, &opts).unwrap();
        assert!(
            !report.pass,
            "elementwise bias went undetected: {}",
            report.summary_line()
        );
        // The flagged entries concentrate in the fourth-moment families.
        let flagged_kinds: Vec<&str> = report
            .rows
            .iter()
            .filter(|r| r.z > VALIDATE_Z_LIMIT)
            .map(|r| r.kind)
            .collect();
        assert!(flagged_kinds
            .iter()
            .all(|k| ["csq", "sat_fourth", "sat_interference", "se"].contains(k)));
    }

    #[test]
    fn write_run_emits_tables_and_sidecar() {
        let dir = std::env::temp_dir().join(format!("skycell_test_{}", std::process::id()));
        let config = quick_config();
        let hash = config_hash(&config);
        let seeds = seed_list(&config, 1);
        let meta = RunMetadata {
            tool: "skycell",
            version: env!("CARGO_PKG_VERSION"),
            command: "cdf",
            config_hash: &hash,
            seeds: &seeds,
            parameters: serde_json::json!({"psn_w": [10.0], "mc_trials": 0}),
            config: &config,
        };
        let paths = write_run(&dir, "cdf", &[("cdf.csv", "a,b\n1,2\n")], &meta).unwrap();
        assert_eq!(paths.len(), 2);
        let csv = std::fs::read_to_string(&paths[0]).unwrap();
        assert_eq!(csv, "a,b\n1,2\n");
        let meta_text = std::fs::read_to_string(&paths[1]).unwrap();
        assert!(meta_text.contains("\"config_hash\""));
        assert!(meta_text.contains(&hash));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
