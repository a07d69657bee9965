//! Acceptance gate: the seven headline checks, one test per criterion.
//!
//! Every test ends with a single `[PASS] criterion N: ...` line carrying
//! the measured numbers (shown under `--nocapture`); a failing criterion
//! panics with the matching `[FAIL]` line. All tolerances are pinned as
//! constants next to the criterion they serve.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skycell::channel::LinkStatistics;
use skycell::conic::{self, ConicProblem, SolveStatus};
use skycell::experiments::{self, CdfOptions, Strategy, DEFAULT_UAV_SWEEP};
use skycell::moments::{assemble_moments, fourth_moment_norm, MomentMode};
use skycell::montecarlo::{estimate_moments, estimate_se};
use skycell::sca::ScaTermination;
use skycell::{allocation, performance, Mode, ScenarioConfig};
use std::time::Instant;

/// Disagreement in standard errors; exact agreement is 0 even at zero SE.
fn sigmas(diff: f64, stderr: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if stderr == 0.0 {
        f64::INFINITY
    } else {
        diff.abs() / stderr
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: closed-form SE matches the sampling oracle
// ---------------------------------------------------------------------------

const C1_DROPS: usize = 5;
const C1_TRIALS: usize = 20_000;
const C1_MAX_SIGMAS: f64 = 3.0;
const C1_TYPICAL_REL_DEV: f64 = 0.02;
const C1_BUDGET_SECONDS: f64 = 60.0;

#[test]
fn criterion_1_closed_form_se_within_monte_carlo_error() {
    let start = Instant::now();
    let config = ScenarioConfig::desk();
    let mut worst = 0.0_f64;
    let mut rel_devs = Vec::new();
    for seed in experiments::seed_list(&config, C1_DROPS) {
        let stats = experiments::realize(&config, seed).unwrap();
        let moments =
            assemble_moments(&stats.uav, &stats.sat, MomentMode::ExactGaussian).unwrap();
        let alloc = allocation::epa(&config, &moments).unwrap();
        let report = performance::energy_efficiency(&alloc, &moments, &config);
        let mc = estimate_se(&config, &stats.uav, &stats.sat, &alloc, C1_TRIALS, seed).unwrap();
        for k in 0..report.se.len() {
            let z = sigmas(report.se[k] - mc.se[k], mc.se_stderr[k]);
            worst = worst.max(z);
            rel_devs.push(((report.se[k] - mc.se[k]) / mc.se[k]).abs());
            assert!(
                z <= C1_MAX_SIGMAS,
                "[FAIL] criterion 1: seed {seed} GU {k}: closed form {} vs sampled {} +- {} ({z:.2} SE > {C1_MAX_SIGMAS})",
                report.se[k],
                mc.se[k],
                mc.se_stderr[k]
            );
        }
    }
    let typical = median(rel_devs.clone());
    assert!(
        typical <= C1_TYPICAL_REL_DEV,
        "[FAIL] criterion 1: typical |relative deviation| {typical:.4} > {C1_TYPICAL_REL_DEV}"
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed <= C1_BUDGET_SECONDS,
        "[FAIL] criterion 1: took {elapsed:.1} s > {C1_BUDGET_SECONDS} s"
    );
    println!(
        "[PASS] criterion 1: {} per-GU SEs over {C1_DROPS} drops within {C1_MAX_SIGMAS} SE \
         (worst {worst:.2} SE), typical |rel dev| {:.3}% <= {:.0}%, {elapsed:.1} s <= {C1_BUDGET_SECONDS} s",
        rel_devs.len(),
        100.0 * typical,
        100.0 * C1_TYPICAL_REL_DEV
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: moment formulas against the sampling oracle
// ---------------------------------------------------------------------------

const C2_SCENARIOS: usize = 10;
const C2_TRIALS: usize = 100_000;
const C2_MAX_SIGMAS: f64 = 3.0;
/// Fraction of entries allowed beyond 3 SE; matches the documented
/// validation rule (3 SE is the 99.7% band, so a small tail is expected).
const C2_ALLOWED_BEYOND: f64 = 0.03;
const C2_DIAGONAL_REL_TOL: f64 = 1e-10;
const C2_BUDGET_SECONDS: f64 = 120.0;

/// Random link with order-one gains so absolute and relative scales agree.
fn random_link(rng: &mut ChaCha8Rng, len: usize) -> LinkStatistics {
    LinkStatistics::from_parameters(
        len,
        rng.random_range(0.3..2.0),
        rng.random_range(0.3..2.0),
        rng.random_range(0.0..20.0),
        rng.random_range(0.1..0.95),
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        rng.random_range(0.02..0.3),
    )
}

#[test]
fn criterion_2_moment_formulas_match_sampling_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_817);
    let mut checked = 0usize;
    let mut beyond = 0usize;
    let mut worst = 0.0_f64;
    let mut note = |z: f64| {
        checked += 1;
        if z > C2_MAX_SIGMAS {
            beyond += 1;
        }
        worst = worst.max(z);
    };

    for scenario in 0..C2_SCENARIOS {
        let num_uavs = rng.random_range(1..=3);
        let num_gus = rng.random_range(2..=3);
        let uav_antennas = rng.random_range(1..=3);
        let sat_antennas = rng.random_range(2..=4);
        let uav: Vec<Vec<LinkStatistics>> = (0..num_uavs)
            .map(|_| (0..num_gus).map(|_| random_link(&mut rng, uav_antennas)).collect())
            .collect();
        let sat: Vec<LinkStatistics> =
            (0..num_gus).map(|_| random_link(&mut rng, sat_antennas)).collect();

        let cf = assemble_moments(&uav, &sat, MomentMode::ExactGaussian).unwrap();
        let mc = estimate_moments(&uav, &sat, C2_TRIALS, 1000 + scenario as u64).unwrap();

        for k in 0..num_gus {
            // Mean inner products, every user pair and UAV.
            for i in 0..num_gus {
                for l in 0..num_uavs {
                    note(sigmas((cf.b[k][i][l] - mc.b[k][i][l]).norm(), mc.b_se[k][i][l]));
                }
                // Second moments: Hermitian, so the upper triangle suffices.
                for m in 0..num_uavs {
                    for n in m..num_uavs {
                        note(sigmas(
                            (cf.csq[k][i][(m, n)] - mc.csq[k][i][(m, n)]).norm(),
                            mc.csq_se[k][i][(m, n)],
                        ));
                    }
                }
            }
            // Satellite moments: mean signal, quartic norm, cross powers.
            note(sigmas(cf.sat_signal[k] - mc.sat_signal[k], mc.sat_signal_se[k]));
            note(sigmas(cf.sat_fourth[k] - mc.sat_fourth[k], mc.sat_fourth_se[k]));
            for i in (k + 1)..num_gus {
                note(sigmas(cf.sat_cross[(k, i)] - mc.sat_cross[(k, i)], mc.sat_cross_se[(k, i)]));
            }
        }
    }
    let fraction = beyond as f64 / checked as f64;
    assert!(
        fraction <= C2_ALLOWED_BEYOND,
        "[FAIL] criterion 2: {beyond} of {checked} moment entries beyond {C2_MAX_SIGMAS} SE \
         ({:.2}% > {:.0}%)",
        100.0 * fraction,
        100.0 * C2_ALLOWED_BEYOND
    );

    // Mode agreement: with a diagonal scattering covariance the antennas
    // are independent, so the element-wise quartic norm is exact.
    let mut diag_worst = 0.0_f64;
    for _ in 0..20 {
        let len = rng.random_range(1..=4);
        let mu = DVector::from_fn(len, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let variances =
            DVector::from_fn(len, |_, _| Complex64::new(rng.random_range(0.3..2.0), 0.0));
        let nlos_cov = DMatrix::from_diagonal(&variances);
        let corr = &mu * mu.adjoint() + &nlos_cov;
        let stats = LinkStatistics {
            mu,
            nlos_cov,
            corr,
            beta_los: 1.0,
            beta_nlos: 1.0,
            kappa: 1.0,
            pr_los: 0.5,
            aoa: 0.0,
        };
        let exact = fourth_moment_norm(&stats, MomentMode::ExactGaussian);
        let elementwise = fourth_moment_norm(&stats, MomentMode::Elementwise);
        let rel = (exact - elementwise).abs() / exact.abs();
        diag_worst = diag_worst.max(rel);
        assert!(
            rel <= C2_DIAGONAL_REL_TOL,
            "[FAIL] criterion 2: diagonal covariance modes disagree: \
             exact {exact} vs element-wise {elementwise} (rel {rel:.2e})"
        );
    }

    // The correlated counterexample the element-wise variant gets wrong:
    // zero mean, unit variances, cross-correlation one half.
    let half = Complex64::new(0.5, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let corr = DMatrix::from_row_slice(2, 2, &[one, half, half, one]);
    let correlated = LinkStatistics {
        mu: DVector::zeros(2),
        nlos_cov: corr.clone(),
        corr,
        beta_los: 0.0,
        beta_nlos: 1.0,
        kappa: 0.0,
        pr_los: 0.0,
        aoa: 0.0,
    };
    let exact = fourth_moment_norm(&correlated, MomentMode::ExactGaussian);
    let elementwise = fourth_moment_norm(&correlated, MomentMode::Elementwise);
    assert!(
        (exact - 6.5).abs() < 1e-12 && (elementwise - 6.0).abs() < 1e-12,
        "[FAIL] criterion 2: counterexample gave exact {exact} (want 6.5) and \
         element-wise {elementwise} (want 6)"
    );

    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed <= C2_BUDGET_SECONDS,
        "[FAIL] criterion 2: took {elapsed:.1} s > {C2_BUDGET_SECONDS} s"
    );
    println!(
        "[PASS] criterion 2: {checked} moment entries over {C2_SCENARIOS} scenarios, \
         {beyond} beyond {C2_MAX_SIGMAS} SE ({:.2}% <= {:.0}%, worst {worst:.2} SE); \
         diagonal-covariance modes within {diag_worst:.1e} <= {C2_DIAGONAL_REL_TOL:.0e}; \
         counterexample 6.5 vs 6 reproduced; {elapsed:.1} s <= {C2_BUDGET_SECONDS} s",
        100.0 * fraction,
        100.0 * C2_ALLOWED_BEYOND
    );
}

// ---------------------------------------------------------------------------
// Criteria 3 and 4: optimizer behavior over 50 desk drops
// ---------------------------------------------------------------------------

const C3_DROPS: usize = 50;
const C3_MONOTONE_REL_SLACK: f64 = 1e-6;
const C3_MIN_CONVERGED: f64 = 0.95;
const C3_BUDGET_REL_SLACK: f64 = 1e-6;
const C3_QOS_SLACK: f64 = 1e-4;

#[test]
fn criterion_3_sca_monotone_convergent_and_feasible() {
    let config = ScenarioConfig::desk();
    let mut converged = 0usize;
    let mut total_iters = 0usize;
    for seed in experiments::seed_list(&config, C3_DROPS) {
        let stats = experiments::realize(&config, seed).unwrap();
        let moments =
            assemble_moments(&stats.uav, &stats.sat, MomentMode::ExactGaussian).unwrap();
        let run = experiments::optimize_eem(&config, &moments, seed).unwrap();

        for w in run.outcome.trace.windows(2) {
            assert!(
                w[1] >= w[0] - C3_MONOTONE_REL_SLACK * w[0].abs(),
                "[FAIL] criterion 3: seed {seed}: objective regressed {} -> {}",
                w[0],
                w[1]
            );
        }
        if let ScaTermination::Converged { iters } = run.outcome.termination {
            assert!(
                iters <= config.sca_max_iters,
                "[FAIL] criterion 3: seed {seed}: {iters} iterations exceed the cap"
            );
            converged += 1;
            total_iters += iters;
        }
        for l in 0..moments.num_uavs() {
            let radiated = run.outcome.alloc.uav_radiated(l, &moments);
            assert!(
                radiated <= config.p_ap_dl * (1.0 + C3_BUDGET_REL_SLACK),
                "[FAIL] criterion 3: seed {seed}: UAV {l} radiates {radiated} W \
                 over the {} W budget",
                config.p_ap_dl
            );
        }
        for (k, &se) in run.outcome.report.se.iter().enumerate() {
            assert!(
                se >= config.se_min - C3_QOS_SLACK,
                "[FAIL] criterion 3: seed {seed}: GU {k} SE {se} below the QoS floor {}",
                config.se_min
            );
        }
    }
    let rate = converged as f64 / C3_DROPS as f64;
    assert!(
        rate >= C3_MIN_CONVERGED,
        "[FAIL] criterion 3: only {converged}/{C3_DROPS} runs terminated by the \
         epsilon rule ({:.0}% < {:.0}%)",
        100.0 * rate,
        100.0 * C3_MIN_CONVERGED
    );
    println!(
        "[PASS] criterion 3: {C3_DROPS} drops monotone within {C3_MONOTONE_REL_SLACK:.0e}; \
         {converged}/{C3_DROPS} converged by the epsilon rule ({:.0}% >= {:.0}%, \
         mean {:.1} iterations); budgets within {C3_BUDGET_REL_SLACK:.0e}; \
         QoS within {C3_QOS_SLACK:.0e}",
        100.0 * rate,
        100.0 * C3_MIN_CONVERGED,
        total_iters as f64 / converged.max(1) as f64
    );
}

const C4_DROPS: usize = 50;
const C4_FPA_EXPONENTS: [f64; 4] = [-1.0, -0.5, 0.0, 0.5];
const C4_MIN_WIN_RATE: f64 = 0.90;

#[test]
fn criterion_4_optimizer_beats_start_always_and_fractional_baselines_mostly() {
    let config = ScenarioConfig::desk();
    let mut fpa_wins = 0usize;
    for seed in experiments::seed_list(&config, C4_DROPS) {
        let stats = experiments::realize(&config, seed).unwrap();
        let moments =
            assemble_moments(&stats.uav, &stats.sat, MomentMode::ExactGaussian).unwrap();
        let run = experiments::optimize_eem(&config, &moments, seed).unwrap();
        assert!(
            run.outcome.report.ee >= run.init_ee,
            "[FAIL] criterion 4: seed {seed}: optimized EE {} below start {}",
            run.outcome.report.ee,
            run.init_ee
        );
        let fpa_best = C4_FPA_EXPONENTS
            .iter()
            .map(|&nu| {
                let alloc = allocation::fpa(&config, &moments, nu).unwrap();
                performance::energy_efficiency(&alloc, &moments, &config).ee
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if run.outcome.report.ee >= fpa_best {
            fpa_wins += 1;
        }
    }
    let rate = fpa_wins as f64 / C4_DROPS as f64;
    assert!(
        rate >= C4_MIN_WIN_RATE,
        "[FAIL] criterion 4: optimizer at or above the best fractional baseline on \
         only {fpa_wins}/{C4_DROPS} drops ({:.0}% < {:.0}%)",
        100.0 * rate,
        100.0 * C4_MIN_WIN_RATE
    );
    println!(
        "[PASS] criterion 4: optimized EE >= start on {C4_DROPS}/{C4_DROPS} drops; \
         >= best fractional baseline (exponents {C4_FPA_EXPONENTS:?}) on \
         {fpa_wins}/{C4_DROPS} ({:.0}% >= {:.0}%)",
        100.0 * rate,
        100.0 * C4_MIN_WIN_RATE
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: qualitative trends
// ---------------------------------------------------------------------------

const C5_SEEDS: usize = 20;
// The mode-ordering medians get more seeds: the UAV-only vs satellite-only
// gap is real but modest at desk scale, and 50 drops pin it well clear of
// drop-to-drop noise.
const C5_ORDERING_SEEDS: usize = 50;
const C5_GU_SWEEP: [usize; 2] = [2, 8];

#[test]
fn criterion_5_efficiency_and_se_trends() {
    let config = ScenarioConfig::desk();
    let seeds = experiments::seed_list(&config, C5_SEEDS);

    // Equal-power efficiency falls as the swarm grows: fixed power scales
    // with L while the sum SE saturates.
    let uav_table = experiments::run_ee_vs_uavs(
        &config,
        &DEFAULT_UAV_SWEEP,
        &seeds,
        MomentMode::ExactGaussian,
    )
    .unwrap();
    let epa_means: Vec<f64> = DEFAULT_UAV_SWEEP
        .iter()
        .map(|&l| uav_table.mean_ee(l, Strategy::Epa).unwrap())
        .collect();
    for (pair, w) in epa_means.windows(2).enumerate() {
        assert!(
            w[1] < w[0],
            "[FAIL] criterion 5: equal-power EE not strictly decreasing in L: \
             {epa_means:?} at L = {DEFAULT_UAV_SWEEP:?} (step {pair})"
        );
    }

    // Optimized efficiency rises with the user count: more served users add
    // sum SE against the same fixed power.
    let gu_table =
        experiments::run_ee_vs_gus(&config, &C5_GU_SWEEP, &seeds, MomentMode::ExactGaussian)
            .unwrap();
    let ee_k2 = gu_table.mean_ee(2, Strategy::Eem).unwrap();
    let ee_k8 = gu_table.mean_ee(8, Strategy::Eem).unwrap();
    assert!(
        ee_k8 > ee_k2,
        "[FAIL] criterion 5: mean optimized EE did not increase from K=2 ({ee_k2}) \
         to K=8 ({ee_k8})"
    );

    // Per-user SE ordering across modes at the 10 W satellite budget.
    let ordering_seeds = experiments::seed_list(&config, C5_ORDERING_SEEDS);
    let cdf = experiments::run_cdf(
        &config,
        &ordering_seeds,
        &CdfOptions {
            psn_w: vec![10.0],
            mc_trials: 0,
            ..CdfOptions::default()
        },
    )
    .unwrap();
    let med_both = median(cdf.cell_se(Mode::NtnTn, 10.0));
    let med_uav = median(cdf.cell_se(Mode::TnOnly, 10.0));
    let med_sat = median(cdf.cell_se(Mode::NtnOnly, 10.0));
    assert!(
        med_both > med_uav && med_uav > med_sat,
        "[FAIL] criterion 5: median SE ordering violated: joint {med_both}, \
         UAV-only {med_uav}, satellite-only {med_sat}"
    );

    println!(
        "[PASS] criterion 5: equal-power EE strictly decreasing over L={DEFAULT_UAV_SWEEP:?} \
         ({:.4} -> {:.4}); optimized EE up from K=2 to K=8 ({ee_k2:.4} -> {ee_k8:.4}); \
         median SE joint {med_both:.3} > UAV-only {med_uav:.3} > satellite-only {med_sat:.3} \
         ({C5_ORDERING_SEEDS} seeds); sweeps over {C5_SEEDS} seeds",
        epa_means[0],
        epa_means[epa_means.len() - 1]
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: conic layer against analytic answers and a slow oracle
// ---------------------------------------------------------------------------

const C6_ANALYTIC_TOL: f64 = 1e-6;
const C6_ORACLE_REL_TOL: f64 = 1e-6;
const C6_INSTANCES: usize = 20;

/// Projection onto an intersection of a ball and a box by Dykstra's
/// alternating scheme, run to machine-level fixed point.
fn project_ball_box(
    point: &DVector<f64>,
    center: &DVector<f64>,
    radius: f64,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> DVector<f64> {
    let mut x = point.clone();
    let mut p = DVector::zeros(x.len());
    let mut q = DVector::zeros(x.len());
    for _ in 0..500 {
        let before = x.clone();
        let y = &x + &p;
        let mut z = &y - center;
        let norm = z.norm();
        if norm > radius {
            z *= radius / norm;
        }
        let xb = center + z;
        p = y - &xb;
        let y2 = &xb + &q;
        let xn = DVector::from_fn(x.len(), |i, _| y2[i].clamp(lower[i], upper[i]));
        q = y2 - &xn;
        x = xn;
        if (&x - before).norm() <= 1e-15 {
            break;
        }
    }
    x
}

#[test]
fn criterion_6_conic_solver_matches_analytic_and_oracle_answers() {
    // Analytic instances, each solved to 1e-6.
    // (a) Linear objective on a ball: max 3x + 4y, x^2 + y^2 <= 1 -> 5.
    let mut ball = ConicProblem::default();
    let x = ball.add_var("x", None, None, 1.0);
    let y = ball.add_var("y", None, None, 1.0);
    ball.set_objective_max(&[(x, 3.0), (y, 4.0)]);
    ball.add_quadratic_le(vec![vec![(x, 1.0)], vec![(y, 1.0)]], &[], 1.0, "ball");
    let sol = conic::solve(&ball, conic::DEFAULT_TOLERANCE, conic::DEFAULT_ITERATION_CAP).unwrap();
    assert!(
        sol.status == SolveStatus::Optimal && (sol.objective - 5.0).abs() <= C6_ANALYTIC_TOL,
        "[FAIL] criterion 6: ball instance gave {} ({:?})",
        sol.objective,
        sol.status
    );

    // (b) Quadratic cover with a linear term: min x^2 - xi over x >= 1
    //     becomes max xi with x^2 - xi <= -1/4 at x = 1 -> xi = 5/4... the
    //     instance pins x at its bound, xi = x^2 + 1/4 is minimized there.
    let mut cover = ConicProblem::default();
    let xv = cover.add_var("x", Some(1.0), None, 1.0);
    let xi = cover.add_var("xi", None, None, 1.0);
    cover.set_objective_max(&[(xi, -1.0)]);
    cover.add_quadratic_le(vec![vec![(xv, 1.0)]], &[(xi, -1.0)], -0.25, "cover");
    let sol =
        conic::solve(&cover, conic::DEFAULT_TOLERANCE, conic::DEFAULT_ITERATION_CAP).unwrap();
    assert!(
        (sol.values[xi] - 1.25).abs() <= C6_ANALYTIC_TOL,
        "[FAIL] criterion 6: cover instance gave xi = {}",
        sol.values[xi]
    );

    // (c) Badly scaled units recovered through scale hints:
    //     max x, x^2 <= 1e-12 -> x = 1e-6.
    let mut units = ConicProblem::default();
    let u = units.add_var("x", Some(0.0), None, 1e-6);
    units.set_objective_max(&[(u, 1.0)]);
    units.add_quadratic_le(vec![vec![(u, 1.0)]], &[], 1e-12, "tiny_ball");
    let sol =
        conic::solve(&units, conic::DEFAULT_TOLERANCE, conic::DEFAULT_ITERATION_CAP).unwrap();
    assert!(
        (sol.values[u] - 1e-6).abs() <= C6_ANALYTIC_TOL * 1e-6,
        "[FAIL] criterion 6: scaled instance gave {} (want 1e-6)",
        sol.values[u]
    );

    // Randomized instances against a projected-gradient oracle: maximize
    // c.x over an off-center ball intersected with a box. The oracle climbs
    // with a three-stage diminishing step and exact projections.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_rel = 0.0_f64;
    for instance in 0..C6_INSTANCES {
        let n = rng.random_range(2..=10);
        let center = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let radius = rng.random_range(0.5..2.0);
        let lower = DVector::from_fn(n, |i, _| center[i] - rng.random_range(0.2..1.5));
        let upper = DVector::from_fn(n, |i, _| center[i] + rng.random_range(0.2..1.5));
        let c = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));

        let mut problem = ConicProblem::default();
        let vars: Vec<usize> = (0..n)
            .map(|i| problem.add_var(&format!("x{i}"), Some(lower[i]), Some(upper[i]), 1.0))
            .collect();
        problem.set_objective_max(
            &vars.iter().map(|&v| (v, c[v])).collect::<Vec<_>>(),
        );
        // ||x - center||^2 <= r^2 as sum x_i^2 - 2 center.x <= r^2 - ||center||^2.
        problem.add_quadratic_le(
            (0..n).map(|i| vec![(vars[i], 1.0)]).collect(),
            &(0..n).map(|i| (vars[i], -2.0 * center[i])).collect::<Vec<_>>(),
            radius * radius - center.norm_squared(),
            "ball",
        );
        let sol = conic::solve(&problem, conic::DEFAULT_TOLERANCE, conic::DEFAULT_ITERATION_CAP)
            .unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "instance {instance}");

        let mut point = project_ball_box(
            &DVector::zeros(n),
            &center,
            radius,
            &lower,
            &upper,
        );
        for &step in &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7] {
            for _ in 0..3_000 {
                point = project_ball_box(&(&point + &c * step), &center, radius, &lower, &upper);
            }
        }
        let oracle = c.dot(&point);
        let rel = (sol.objective - oracle).abs() / oracle.abs().max(1e-12);
        worst_rel = worst_rel.max(rel);
        assert!(
            rel <= C6_ORACLE_REL_TOL,
            "[FAIL] criterion 6: instance {instance} (n = {n}): solver {} vs \
             oracle {oracle} (rel {rel:.2e} > {C6_ORACLE_REL_TOL:.0e})",
            sol.objective
        );
    }
    println!(
        "[PASS] criterion 6: analytic instances within {C6_ANALYTIC_TOL:.0e}; \
         {C6_INSTANCES} randomized instances within {C6_ORACLE_REL_TOL:.0e} of the \
         projected-gradient oracle (worst {worst_rel:.1e})"
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: byte-identical CSV across runs and worker counts
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_csv_output_is_deterministic() {
    let bin = env!("CARGO_BIN_EXE_skycell");
    let scratch = std::env::temp_dir().join(format!("skycell-acceptance-{}", std::process::id()));
    let commands: Vec<(&str, Vec<String>)> = vec![
        (
            "cdf",
            vec!["cdf", "--seeds", "2", "--psn", "10,50", "--mc-trials", "2000"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
        (
            "ee-vs-uavs",
            vec!["ee-vs-uavs", "--seeds", "2"].into_iter().map(String::from).collect(),
        ),
        (
            "ee-vs-gus",
            vec!["ee-vs-gus", "--seeds", "2"].into_iter().map(String::from).collect(),
        ),
        (
            "validate",
            vec!["validate", "--seeds", "1", "--mc-trials", "5000"]
                .into_iter()
                .map(String::from)
                .collect(),
        ),
    ];

    let mut compared = 0usize;
    for (name, args) in &commands {
        // Same command three times: twice at four workers, once at one.
        let runs = [("a", "4"), ("b", "4"), ("c", "1")];
        let mut outputs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
        for (tag, threads) in runs {
            let dir = scratch.join(format!("{name}-{tag}"));
            let status = std::process::Command::new(bin)
                .args(args)
                .arg("--out")
                .arg(&dir)
                .env("RAYON_NUM_THREADS", threads)
                .stdout(std::process::Stdio::null())
                .stderr(std::process::Stdio::null())
                .status()
                .expect("spawn CLI");
            assert!(
                status.success(),
                "[FAIL] criterion 7: `{name}` exited with {status:?}"
            );
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
                .unwrap()
                .map(|e| e.unwrap().path())
                .filter(|p| p.extension().is_some_and(|e| e == "csv"))
                .map(|p| {
                    (
                        p.file_name().unwrap().to_string_lossy().into_owned(),
                        std::fs::read(&p).unwrap(),
                    )
                })
                .collect();
            files.sort_by(|a, b| a.0.cmp(&b.0));
            assert!(!files.is_empty(), "[FAIL] criterion 7: `{name}` wrote no CSV");
            outputs.push(files);
        }
        for other in &outputs[1..] {
            assert_eq!(
                outputs[0].len(),
                other.len(),
                "[FAIL] criterion 7: `{name}` wrote different file sets"
            );
            for ((name_a, bytes_a), (name_b, bytes_b)) in outputs[0].iter().zip(other) {
                assert_eq!(name_a, name_b);
                assert!(
                    bytes_a == bytes_b,
                    "[FAIL] criterion 7: `{name}` file {name_a} differs across runs \
                     or worker counts"
                );
                compared += 1;
            }
        }
    }
    std::fs::remove_dir_all(&scratch).ok();
    println!(
        "[PASS] criterion 7: {compared} CSV file pairs byte-identical across repeated \
         runs and worker counts 4 vs 1, over all four commands"
    );
}
