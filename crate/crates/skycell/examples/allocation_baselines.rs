//! Power-allocation baselines compared on one scenario drop.
//!
//! Evaluates equal power allocation and the fractional family (exponents
//! -1, -0.5, 0, 0.5) on the same desk-scale drop. Negative exponents favor
//! weak users (fairness), positive ones favor strong channels (throughput);
//! nu = -1 reproduces equal power exactly.
//!
//! Run with: cargo run --example allocation_baselines

use skycell::moments::{assemble_moments, MomentMode};
use skycell::{allocation, experiments, performance, ScenarioConfig};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let config = ScenarioConfig::desk();
    let seed = config.rng_seed;

    let stats = experiments::realize(&config, seed)?;
    let moments = assemble_moments(&stats.uav, &stats.sat, MomentMode::ExactGaussian)?;

    println!("desk scenario, seed {seed}; QoS floor {} bit/s/Hz per user\n", config.se_min);
    println!("strategy    sum SE        min SE        power (W)   EE (bit/s/Hz/W)");

    let mut rows: Vec<(String, _)> = vec![(
        "EPA".to_owned(),
        allocation::epa(&config, &moments)?,
    )];
    for nu in [-1.0, -0.5, 0.0, 0.5] {
        rows.push((format!("FPA({nu})"), allocation::fpa(&config, &moments, nu)?));
    }

    for (name, alloc) in &rows {
        let eff = alloc.effective(config.mode);
        eff.check_budgets(&moments, &config)?;
        let report = performance::energy_efficiency(&eff, &moments, &config);
        let min_se = report.se.iter().cloned().fold(f64::INFINITY, f64::min);
        println!(
            "{name:<10}  {:>9.6}   {:>9.6}{}  {:>8.3}    {:.6}",
            report.sum_se,
            min_se,
            if min_se < config.se_min { "!" } else { " " },
            report.p_tot,
            report.ee
        );
    }

    // Budget use: every strategy spends the full per-UAV budget; they only
    // differ in how the budget is split across users.
    let (_, fpa_half) = &rows[4];
    println!("\nper-UAV radiated power under FPA(0.5), budget {} W:", config.p_ap_dl);
    for l in 0..moments.num_uavs() {
        println!("  UAV {l}: {:.6} W", fpa_half.uav_radiated(l, &moments));
    }

    println!(
        "\nnone of the baselines know about the QoS floor ('!' marks a violation); \
         the optimizer in the optimize_ee example enforces it."
    );

    Ok(())
}
