//! Per-user spectral efficiency: closed form versus Monte Carlo.
//!
//! Evaluates the hardening-bound SE from channel statistics alone, then
//! re-estimates the same bound by sampling 20000 channel realizations, and
//! prints both per user with the relative deviation. Equal power loading on
//! both layers; the two columns should agree to a fraction of a percent.
//!
//! Run with: cargo run --example se_closed_form_vs_mc

use skycell::moments::{assemble_moments, MomentMode};
use skycell::montecarlo::estimate_se;
use skycell::{allocation, experiments, performance, ScenarioConfig};
use std::error::Error;
use std::time::Instant;

fn main() -> Result<(), Box<dyn Error>> {
    let config = ScenarioConfig::desk();
    let seed = config.rng_seed;
    let trials = config.mc_trials; // 20000 for the desk preset

    let stats = experiments::realize(&config, seed)?;
    let moments = assemble_moments(&stats.uav, &stats.sat, MomentMode::ExactGaussian)?;
    let alloc = allocation::epa(&config, &moments)?;

    let t0 = Instant::now();
    let report = performance::energy_efficiency(&alloc.effective(config.mode), &moments, &config);
    let cf_time = t0.elapsed();

    let t0 = Instant::now();
    let mc = estimate_se(&config, &stats.uav, &stats.sat, &alloc, trials, seed)?;
    let mc_time = t0.elapsed();

    println!(
        "desk scenario, seed {seed}, equal power, {} trials\n",
        mc.trials
    );
    println!("GU   closed form      Monte Carlo            deviation");
    for k in 0..report.se.len() {
        let cf = report.se[k];
        let rel = (cf - mc.se[k]) / mc.se[k];
        println!(
            "{k:2}   {cf:.6}   {:.6} +- {:.6}   {:+.3}% ({:+.2} SE)",
            mc.se[k],
            mc.se_stderr[k],
            100.0 * rel,
            (cf - mc.se[k]) / mc.se_stderr[k]
        );
    }
    println!(
        "\nsum SE {:.4} bit/s/Hz, radiated + fixed power {:.3} W, EE {:.5} bit/s/Hz/W",
        report.sum_se, report.p_tot, report.ee
    );
    println!(
        "closed form took {:.2?}; sampling took {:.2?} ({}x slower)",
        cf_time,
        mc_time,
        (mc_time.as_secs_f64() / cf_time.as_secs_f64()).round()
    );

    Ok(())
}
