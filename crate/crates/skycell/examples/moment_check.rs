//! Closed-form precoding moments versus the sampling oracle.
//!
//! Assembles every expectation the closed-form SINR consumes, re-estimates
//! a selection of them by direct channel sampling, and prints both with the
//! disagreement in standard errors. Also shows the one place the two
//! fourth-moment conventions differ: the element-wise variant drops the
//! off-diagonal correlation terms, and the sampler sides with the exact
//! Gaussian identity.
//!
//! Run with: cargo run --example moment_check

use skycell::experiments;
use skycell::moments::{assemble_moments, MomentMode};
use skycell::montecarlo::estimate_moments;
use skycell::ScenarioConfig;
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let config = ScenarioConfig::desk();
    let seed = config.rng_seed;
    let trials = 50_000;

    let stats = experiments::realize(&config, seed)?;
    let exact = assemble_moments(&stats.uav, &stats.sat, MomentMode::ExactGaussian)?;
    let elementwise = assemble_moments(&stats.uav, &stats.sat, MomentMode::Elementwise)?;
    let sampled = estimate_moments(&stats.uav, &stats.sat, trials, seed)?;

    println!("desk scenario, seed {seed}, {trials} channel draws\n");

    // Mean inner products b_{k,k}[l] = tr(E_{l,k}): exact vs sampled.
    println!("desired-signal means b_kk[l] for GU 0 (closed form | sampled +- SE):");
    for l in 0..exact.num_uavs() {
        let cf = exact.b[0][0][l].re;
        let mc = sampled.b[0][0][l].re;
        let se = sampled.b_se[0][0][l];
        println!(
            "  l = {l}:  {cf:.4e} | {mc:.4e} +- {se:.1e}   ({:+.2} SE)",
            (mc - cf) / se
        );
    }

    // Variance of the desired signal: this is where the fourth moment
    // enters, and where the two conventions part ways.
    println!("\ndesired-signal variance diag(C^2_kk) for GU 0, UAV 0:");
    let cf_exact = exact.csq[0][0][(0, 0)].re;
    let cf_elem = elementwise.csq[0][0][(0, 0)].re;
    let mc = sampled.csq[0][0][(0, 0)].re;
    let se = sampled.csq_se[0][0][(0, 0)];
    println!("  exact Gaussian: {cf_exact:.4e}   ({:+.2} SE from sampler)", (mc - cf_exact) / se);
    println!("  element-wise:   {cf_elem:.4e}   ({:+.2} SE from sampler)", (mc - cf_elem) / se);
    println!("  sampled:        {mc:.4e} +- {se:.1e}");

    // Satellite fourth moment E||g||^4 per user.
    println!("\nsatellite fourth moments E||g_k||^4 (exact | element-wise | sampled +- SE):");
    for k in 0..exact.num_gus() {
        let se = sampled.sat_fourth_se[k];
        println!(
            "  GU {k}: {:.4e} | {:.4e} | {:.4e} +- {:.1e}   (exact at {:+.2} SE)",
            exact.sat_fourth[k],
            elementwise.sat_fourth[k],
            sampled.sat_fourth[k],
            se,
            (sampled.sat_fourth[k] - exact.sat_fourth[k]) / se
        );
    }

    // Cross-link satellite powers E|g_k^H g_i|^2 drive inter-user
    // interference through the shared satellite array.
    println!("\nsatellite cross powers E|g_0^H g_i|^2:");
    for i in 1..exact.num_gus() {
        let cf = exact.sat_cross[(0, i)];
        let mc = sampled.sat_cross[(0, i)];
        let se = sampled.sat_cross_se[(0, i)];
        println!("  i = {i}: {cf:.4e} | {mc:.4e} +- {se:.1e}   ({:+.2} SE)", (mc - cf) / se);
    }

    println!(
        "\nthe exact-Gaussian column stays within a few SE of the sampler; the \
         element-wise variant is biased wherever scattering is correlated."
    );

    Ok(())
}
