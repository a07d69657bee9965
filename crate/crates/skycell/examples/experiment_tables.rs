//! Seeded experiment tables: the library behind the command-line tool.
//!
//! Produces a miniature version of each output table - the per-user SE
//! listing across modes and satellite powers, and the efficiency-vs-swarm-
//! size sweep - then writes them to disk next to a metadata sidecar. Seeds
//! fan out across worker threads with ordered collection, so the bytes are
//! identical no matter how many threads run (try RAYON_NUM_THREADS=1).
//!
//! Run with: cargo run --example experiment_tables

use skycell::experiments::{
    self, CdfOptions, RunMetadata, DEFAULT_UAV_SWEEP,
};
use skycell::moments::MomentMode;
use skycell::ScenarioConfig;
use std::error::Error;
use std::path::Path;

fn main() -> Result<(), Box<dyn Error>> {
    let config = ScenarioConfig::desk();
    let seeds = experiments::seed_list(&config, 3);
    let hash = experiments::config_hash(&config);

    // Per-user SE across modes and satellite powers (closed form only;
    // set mc_trials > 0 to pair every value with a sampled estimate).
    let cdf = experiments::run_cdf(
        &config,
        &seeds,
        &CdfOptions {
            psn_w: vec![10.0, 100.0],
            mc_trials: 0,
            ..CdfOptions::default()
        },
    )?;
    println!("per-user SE table ({} rows):", cdf.rows.len());
    for line in cdf.to_csv().lines().take(6) {
        println!("  {line}");
    }
    println!("  ...\n");

    // Efficiency versus swarm size, all strategies, two sizes to stay fast.
    let sweep = experiments::run_ee_vs_uavs(
        &config,
        &DEFAULT_UAV_SWEEP[..2],
        &seeds,
        MomentMode::ExactGaussian,
    )?;
    println!("efficiency vs swarm size (mean over {} seeds):", seeds.len());
    print!("{}", sweep.summary_csv());

    // Everything on disk: CSV tables plus a metadata sidecar holding the
    // resolved config, so a table is reproducible from its directory alone.
    let dir = Path::new("out/example_tables");
    let written = experiments::write_run(
        dir,
        "ee_vs_uavs",
        &[
            ("ee_vs_uavs.csv", sweep.summary_csv().as_str()),
            ("ee_vs_uavs_seeds.csv", sweep.detail_csv().as_str()),
        ],
        &RunMetadata {
            tool: "skycell",
            version: env!("CARGO_PKG_VERSION"),
            command: "example experiment_tables",
            config_hash: &hash,
            seeds: &seeds,
            parameters: serde_json::json!({ "uav_counts": &DEFAULT_UAV_SWEEP[..2] }),
            config: &config,
        },
    )?;
    println!("\nwrote:");
    for path in written {
        println!("  {}", path.display());
    }

    Ok(())
}
