//! Experiment runner: SE distributions, efficiency sweeps, and closed-form
//! versus Monte Carlo validation, all emitted as CSV with a JSON sidecar.
//!
//! Thin wrapper over [`skycell::experiments`]; all logic lives in the
//! library. Worker count is controlled only by the `RAYON_NUM_THREADS`
//! environment variable, and results are byte-identical regardless of it.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use skycell::experiments::{
    self, CdfOptions, RunMetadata, ValidateOptions, DEFAULT_GU_SWEEP, DEFAULT_UAV_SWEEP,
};
use skycell::moments::MomentMode;
use skycell::scenario::{Mode, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "skycell",
    version,
    about = "Downlink SE/EE experiments for a satellite + UAV cell-free MIMO network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario configuration file (TOML mirroring ScenarioConfig fields).
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in preset: `desk` (default) or `paper`.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Number of scenario seeds (drops); seed i is rng_seed + i.
    #[arg(long, global = true, default_value_t = 20)]
    seeds: usize,

    /// Restrict to one network mode (default: all three for `cdf`, the
    /// config's mode otherwise).
    #[arg(long, global = true)]
    mode: Option<String>,

    /// Satellite downlink powers in watts (comma-separated; `cdf` sweeps
    /// them, other commands accept a single override).
    #[arg(long, global = true, value_delimiter = ',')]
    psn: Option<Vec<f64>>,

    /// Output directory for CSV tables and metadata sidecars.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Monte Carlo trials (cdf: per-cell CF/MC pairing when > 0;
    /// validate: trials per seed, defaulting to the config's mc_trials).
    #[arg(long = "mc-trials", global = true)]
    mc_trials: Option<usize>,

    /// Moment evaluation variant: `exact` (correlation-aware) or `paper`
    /// (element-wise variant that assumes uncorrelated antennas).
    #[arg(long = "moment-mode", global = true, default_value = "exact")]
    moment_mode: String,
}

#[derive(Subcommand)]
enum Command {
    /// Per-user SE samples across modes and satellite powers.
    Cdf,
    /// Mean energy efficiency versus UAV count, per strategy.
    EeVsUavs,
    /// Mean energy efficiency versus user count, per strategy.
    EeVsGus,
    /// Closed-form versus Monte Carlo cross-check; nonzero exit on failure.
    Validate,
}

fn resolve_config(cli: &Cli) -> Result<ScenarioConfig, String> {
    let mut config = match (&cli.config, &cli.preset) {
        (Some(path), _) => {
            ScenarioConfig::from_toml_path(path).map_err(|e| e.to_string())?
        }
        (None, Some(name)) => ScenarioConfig::preset(name)
            .ok_or_else(|| format!("unknown preset `{name}` (try `desk` or `paper`)"))?,
        (None, None) => ScenarioConfig::desk(),
    };
    if let Some(mode) = &cli.mode {
        config.mode = Mode::from_str(mode)?;
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<bool, String> {
    let mut config = resolve_config(cli)?;
    let moment_mode = MomentMode::from_str(&cli.moment_mode)?;
    let seeds = experiments::seed_list(&config, cli.seeds);
    let err = |e: experiments::ExperimentError| e.to_string();

    // A single satellite-power override applies to every command; sweeping
    // several only makes sense for `cdf`.
    let psn_sweep = match (&cli.psn, &cli.command) {
        (Some(list), Command::Cdf) => list.clone(),
        (Some(list), _) if list.len() == 1 => {
            config.p_sn_dl = list[0];
            vec![list[0]]
        }
        (Some(_), _) => {
            return Err("only `cdf` sweeps multiple --psn values".to_owned())
        }
        (None, _) => experiments::DEFAULT_PSN_W.to_vec(),
    };

    let hash = experiments::config_hash(&config);
    let mut pass = true;
    let written = match cli.command {
        Command::Cdf => {
            let opts = CdfOptions {
                modes: match &cli.mode {
                    Some(m) => vec![Mode::from_str(m)?],
                    None => vec![Mode::NtnTn, Mode::TnOnly, Mode::NtnOnly],
                },
                psn_w: psn_sweep,
                mc_trials: cli.mc_trials.unwrap_or(0),
                moment_mode,
            };
            let table = experiments::run_cdf(&config, &seeds, &opts).map_err(err)?;
            let meta = RunMetadata {
                tool: "skycell",
                version: env!("CARGO_PKG_VERSION"),
                command: "cdf",
                config_hash: &hash,
                seeds: &seeds,
                parameters: serde_json::json!({
                    "modes": opts.modes.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
                    "psn_w": opts.psn_w,
                    "mc_trials": opts.mc_trials,
                    "moment_mode": opts.moment_mode.as_str(),
                    "rows": table.rows.len(),
                }),
                config: &config,
            };
            let csv = table.to_csv();
            experiments::write_run(&cli.out, "cdf", &[("cdf.csv", csv.as_str())], &meta)
                .map_err(err)?
        }
        Command::EeVsUavs | Command::EeVsGus => {
            let (name, table) = match cli.command {
                Command::EeVsUavs => (
                    "ee_vs_uavs",
                    experiments::run_ee_vs_uavs(
                        &config,
                        &DEFAULT_UAV_SWEEP,
                        &seeds,
                        moment_mode,
                    )
                    .map_err(err)?,
                ),
                _ => (
                    "ee_vs_gus",
                    experiments::run_ee_vs_gus(
                        &config,
                        &DEFAULT_GU_SWEEP,
                        &seeds,
                        moment_mode,
                    )
                    .map_err(err)?,
                ),
            };
            let meta = RunMetadata {
                tool: "skycell",
                version: env!("CARGO_PKG_VERSION"),
                command: name,
                config_hash: &hash,
                seeds: &seeds,
                parameters: serde_json::json!({
                    "axis": table.axis,
                    "sweep": table.summary.iter().map(|r| r.x).collect::<Vec<_>>(),
                    "strategies": experiments::sweep_strategies()
                        .iter()
                        .map(|s| s.label())
                        .collect::<Vec<_>>(),
                    "moment_mode": moment_mode.as_str(),
                }),
                config: &config,
            };
            let summary_name = format!("{name}.csv");
            let detail_name = format!("{name}_seeds.csv");
            let summary_csv = table.summary_csv();
            let detail_csv = table.detail_csv();
            experiments::write_run(
                &cli.out,
                name,
                &[
                    (summary_name.as_str(), summary_csv.as_str()),
                    (detail_name.as_str(), detail_csv.as_str()),
                ],
                &meta,
            )
            .map_err(err)?
        }
        Command::Validate => {
            let opts = ValidateOptions {
                mc_trials: cli.mc_trials.unwrap_or(config.mc_trials),
                moment_mode,
            };
            let report = experiments::run_validate(&config, &seeds, &opts).map_err(err)?;
            println!("{}", report.summary_line());
            pass = report.pass;
            let csv = report.to_csv();
            let meta = RunMetadata {
                tool: "skycell",
                version: env!("CARGO_PKG_VERSION"),
                command: "validate",
                config_hash: &hash,
                seeds: &seeds,
                parameters: serde_json::json!({
                    "mc_trials": opts.mc_trials,
                    "moment_mode": opts.moment_mode.as_str(),
                    "checked": report.checked,
                    "beyond": report.beyond,
                    "allowed_fraction": report.allowed_fraction,
                    "pass": report.pass,
                }),
                config: &config,
            };
            experiments::write_run(
                &cli.out,
                "validate",
                &[("validate.csv", csv.as_str())],
                &meta,
            )
            .map_err(err)?
        }
    };
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
