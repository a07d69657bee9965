//! Successive convex approximation for downlink energy efficiency.
//!
//! The hardening-bound sum rate over total consumed power is maximized in
//! the square roots of the UAV transmit powers, with the satellite frozen
//! at its equal-power split. The nonconvex program is attacked iteratively:
//! around the current point, the rate-over-power ratio, the
//! interference-over-`gamma` fraction, and the squared signal term are each
//! replaced by first-order surrogates, leaving a linear objective over
//! affine and convex quadratic constraints that [`crate::conic`] solves
//! exactly.
//!
//! Each subproblem solution is pulled back to a certified point before the
//! next expansion: a damped step toward the solver's iterate, per-UAV
//! budget capping, and a refit of every auxiliary variable to its true
//! value at the stepped powers. The refit makes the running objective
//! `sum_k r_k` equal the true energy efficiency, so the iteration trace is
//! a sequence of achieved (not surrogate) efficiencies and is kept
//! monotone by construction.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::conic::{self, ConicProblem, SolveError, SolveStatus};
use crate::moments::PrecodingMoments;
use crate::performance::{self, PerformanceReport, PowerAllocation};
use crate::scenario::ScenarioConfig;

/// Lower bound applied to the inverse-SINR auxiliaries `gamma_k`.
pub const GAMMA_MIN: f64 = 1e-8;

/// Upper clamp on `gamma_k` when no QoS floor applies; corresponds to an
/// SINR of 1e-12, i.e. a rate floor of ~1.4e-12 bit/s/Hz.
pub const GAMMA_CAP: f64 = 1e12;

/// Relative tolerance for the surrogate-objective stopping rule.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Damping factors tried per iteration, largest first.
const STEP_SCHEDULE: [f64; 6] = [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125];

/// Slack allowed on iterate invariants (QoS, budgets, bounds).
const INVARIANT_SLACK: f64 = 1e-9;

/// Inverse-SINR value enforcing `SE >= se_min`; `None` when `se_min = 0`
/// leaves the SINR unconstrained from below.
pub fn qos_gamma(se_min: f64) -> Option<f64> {
    assert!(se_min >= 0.0, "minimum spectral efficiency must be nonnegative");
    if se_min == 0.0 {
        None
    } else {
        Some(1.0 / (2f64.powf(se_min) - 1.0))
    }
}

// ---------------------------------------------------------------------------
// First-order surrogates
// ---------------------------------------------------------------------------

/// Tangent plane of `f(gamma, t) = log2(1 + 1/gamma) / t` at one point.
///
/// `f` is jointly convex on `gamma, t > 0` (its Hessian determinant
/// `(2 f g'' - g'^2) / t^4` with `g = log2(1 + 1/gamma)` is positive), so
/// the tangent is a global under-estimator and bounding `r <= tangent`
/// shrinks the true feasible set.
#[derive(Debug, Clone, Copy)]
pub struct RateSurrogate {
    pub gamma_bar: f64,
    pub t_bar: f64,
    /// `f(gamma_bar, t_bar)`.
    pub value_bar: f64,
    /// `df/dgamma` at the expansion point (negative).
    pub d_gamma: f64,
    /// `df/dt` at the expansion point (negative).
    pub d_t: f64,
}

/// Expands `log2(1 + 1/gamma)/t` around `(gamma_bar, t_bar)`.
pub fn linearize_rate_over_power(gamma_bar: f64, t_bar: f64) -> RateSurrogate {
    assert!(gamma_bar > 0.0 && t_bar > 0.0, "expansion point must be positive");
    let ln2 = std::f64::consts::LN_2;
    let value_bar = (1.0 + 1.0 / gamma_bar).log2() / t_bar;
    RateSurrogate {
        gamma_bar,
        t_bar,
        value_bar,
        d_gamma: -1.0 / (ln2 * gamma_bar * (gamma_bar + 1.0) * t_bar),
        d_t: -value_bar / t_bar,
    }
}

impl RateSurrogate {
    /// Tangent value at `(gamma, t)`.
    pub fn value(&self, gamma: f64, t: f64) -> f64 {
        self.value_bar + self.d_gamma * (gamma - self.gamma_bar) + self.d_t * (t - self.t_bar)
    }
}

/// Tangent plane of the linear-fractional bound `xi / gamma` at one point.
///
/// The fraction is not jointly convex, so this surrogate is a plain
/// first-order expansion rather than a one-sided bound; the refit step in
/// [`sca_solve`] restores certified feasibility after every iteration.
#[derive(Debug, Clone, Copy)]
pub struct FractionSurrogate {
    pub xi_bar: f64,
    pub gamma_bar: f64,
}

/// Expands `xi / gamma` around `(xi_bar, gamma_bar)`.
pub fn linearize_fraction(xi_bar: f64, gamma_bar: f64) -> FractionSurrogate {
    assert!(gamma_bar > 0.0, "gamma expansion point must be positive");
    FractionSurrogate { xi_bar, gamma_bar }
}

impl FractionSurrogate {
    /// Coefficient on `xi`.
    pub fn d_xi(&self) -> f64 {
        1.0 / self.gamma_bar
    }

    /// Coefficient on `gamma`.
    pub fn d_gamma(&self) -> f64 {
        -self.xi_bar / (self.gamma_bar * self.gamma_bar)
    }

    /// Tangent value at `(xi, gamma)`.
    pub fn value(&self, xi: f64, gamma: f64) -> f64 {
        self.xi_bar / self.gamma_bar
            + self.d_xi() * (xi - self.xi_bar)
            + self.d_gamma() * (gamma - self.gamma_bar)
    }
}

/// Tangent of the convex square `(b . eta)^2` at `eta_bar`: a global
/// under-estimator, tight at the expansion point.
#[derive(Debug, Clone)]
pub struct SignalTangent {
    /// Gradient `2 (b . eta_bar) b`.
    pub coeffs: DVector<f64>,
    /// Constant `-(b . eta_bar)^2`.
    pub offset: f64,
}

/// Expands `(b . eta)^2` around `eta_bar`.
pub fn linearize_signal_quadratic(b: &DVector<f64>, eta_bar: &DVector<f64>) -> SignalTangent {
    assert_eq!(b.len(), eta_bar.len(), "gradient and point dimensions differ");
    let s_bar = b.dot(eta_bar);
    SignalTangent { coeffs: b * (2.0 * s_bar), offset: -(s_bar * s_bar) }
}

impl SignalTangent {
    /// Tangent value at `eta`.
    pub fn value(&self, eta: &DVector<f64>) -> f64 {
        self.coeffs.dot(eta) + self.offset
    }
}

// ---------------------------------------------------------------------------
// Iterate state
// ---------------------------------------------------------------------------

/// Expansion point for one approximation round: square-root UAV powers plus
/// the auxiliary variables, refit to their true values at those powers.
#[derive(Debug, Clone)]
pub struct ScaIterate {
    /// Square roots of the UAV power coefficients, `L x K`.
    pub eta_sqrt: DMatrix<f64>,
    /// Frozen satellite power coefficients (equal split), length `K`.
    pub eta_sn: Vec<f64>,
    /// Interference-plus-noise bounds, one per user, W.
    pub xi: Vec<f64>,
    /// Inverse-SINR auxiliaries, one per user.
    pub gamma: Vec<f64>,
    /// Total consumed power, W.
    pub t: f64,
    /// Rate-per-power auxiliaries, one per user, bit/s/Hz/W.
    pub r: Vec<f64>,
}

impl ScaIterate {
    /// Power allocation carried by this iterate.
    pub fn alloc(&self) -> PowerAllocation {
        PowerAllocation {
            eta_ap: self.eta_sqrt.map(|v| v * v),
            eta_sn: self.eta_sn.clone(),
        }
    }

    /// Surrogate objective `sum_k r_k`; equals the true energy efficiency
    /// whenever the iterate has been refit.
    pub fn sum_r(&self) -> f64 {
        self.r.iter().sum()
    }

    /// Checks every iterate invariant: `gamma` inside its box, `t` at least
    /// the fixed power floor, budgets respected, and QoS met at the true
    /// SINRs. Returns the first violation as text.
    pub fn validate(
        &self,
        moments: &PrecodingMoments,
        config: &ScenarioConfig,
    ) -> Result<(), String> {
        let gamma_qos = qos_gamma(config.se_min);
        for (k, &g) in self.gamma.iter().enumerate() {
            if g < GAMMA_MIN * (1.0 - 1e-12) {
                return Err(format!("gamma[{k}] = {g} below floor {GAMMA_MIN}"));
            }
            if let Some(cap) = gamma_qos {
                if g > cap + INVARIANT_SLACK {
                    return Err(format!("gamma[{k}] = {g} above QoS cap {cap}"));
                }
            }
        }
        if self.t < config.fixed_power_w() - INVARIANT_SLACK {
            return Err(format!(
                "t = {} below fixed power {}",
                self.t,
                config.fixed_power_w()
            ));
        }
        let alloc = self.alloc();
        alloc
            .check_budgets(moments, config)
            .map_err(|e| format!("budget violation: {e}"))?;
        let noise = config.noise_power_w();
        for k in 0..moments.num_gus() {
            let se = performance::se_dl(performance::sinr_dl(k, &alloc, moments, noise));
            if se < config.se_min - INVARIANT_SLACK {
                return Err(format!("QoS violated: SE[{k}] = {se} < {}", config.se_min));
            }
        }
        Ok(())
    }
}

/// Coherent UAV-plus-satellite signal power for user `k` at the given
/// square-root powers, W (numerator of the hardening-bound SINR).
fn signal_power(k: usize, eta_sqrt: &DMatrix<f64>, eta_sn: &[f64], moments: &PrecodingMoments) -> f64 {
    let uav_amp: f64 = (0..moments.num_uavs())
        .map(|l| moments.b[k][k][l].re * eta_sqrt[(l, k)])
        .sum();
    eta_sn[k] * moments.sat_signal[k] * moments.sat_signal[k] + uav_amp * uav_amp
}

/// True interference-plus-noise power for user `k`, W (denominator of the
/// hardening-bound SINR).
fn interference_power(
    k: usize,
    eta_sqrt: &DMatrix<f64>,
    eta_sn: &[f64],
    moments: &PrecodingMoments,
    noise_w: f64,
) -> f64 {
    let num_uavs = moments.num_uavs();
    let mut acc = moments.sat_interference(k, eta_sn) + noise_w;
    for i in 0..moments.num_gus() {
        let fac = &moments.cfac[k][i];
        for m in 0..num_uavs {
            let mut re = 0.0;
            let mut im = 0.0;
            for l in 0..num_uavs {
                let f = fac[(l, m)];
                re += f.re * eta_sqrt[(l, i)];
                im += f.im * eta_sqrt[(l, i)];
            }
            acc += re * re + im * im;
        }
    }
    acc
}

/// Builds the expansion point for a feasible starting allocation: `gamma`
/// at the QoS bound (or the true inverse SINR when no bound applies), `xi`
/// scaled so the signal constraint holds with equality, `t` at the true
/// consumed power, and `r` at the implied rate-per-power.
pub fn init_state(
    alloc: &PowerAllocation,
    moments: &PrecodingMoments,
    config: &ScenarioConfig,
) -> ScaIterate {
    let eta_sqrt = alloc.eta_ap.map(f64::sqrt);
    let eta_sn = alloc.eta_sn.clone();
    let noise = config.noise_power_w();
    let t = performance::total_power(alloc, moments, config);
    let gamma_qos = qos_gamma(config.se_min);
    let num_gus = moments.num_gus();
    let mut gamma = Vec::with_capacity(num_gus);
    let mut xi = Vec::with_capacity(num_gus);
    let mut r = Vec::with_capacity(num_gus);
    for k in 0..num_gus {
        let g = match gamma_qos {
            Some(cap) => cap,
            None => {
                let sinr = performance::sinr_dl(k, alloc, moments, noise);
                (1.0 / sinr.max(1.0 / GAMMA_CAP)).max(GAMMA_MIN)
            }
        };
        gamma.push(g);
        xi.push(g * signal_power(k, &eta_sqrt, &eta_sn, moments));
        r.push((1.0 + 1.0 / g).log2() / t);
    }
    ScaIterate { eta_sqrt, eta_sn, xi, gamma, t, r }
}

// ---------------------------------------------------------------------------
// Subproblem assembly
// ---------------------------------------------------------------------------

/// Variable layout inside each subproblem, in declaration order.
struct VarMap {
    num_uavs: usize,
    num_gus: usize,
}

impl VarMap {
    fn eta(&self, l: usize, k: usize) -> usize {
        l * self.num_gus + k
    }
    fn xi(&self, k: usize) -> usize {
        self.num_uavs * self.num_gus + k
    }
    fn gamma(&self, k: usize) -> usize {
        self.num_uavs * self.num_gus + self.num_gus + k
    }
    fn t(&self) -> usize {
        self.num_uavs * self.num_gus + 2 * self.num_gus
    }
    fn r(&self, k: usize) -> usize {
        self.num_uavs * self.num_gus + 2 * self.num_gus + 1 + k
    }
}

/// Assembles the convex subproblem around `state`: maximize `sum_k r_k`
/// over per-UAV power budgets, the consumed-power definition, the
/// interference bounds, the linearized signal constraints, and the
/// linearized rate constraints.
pub fn build_subproblem(
    state: &ScaIterate,
    moments: &PrecodingMoments,
    config: &ScenarioConfig,
) -> ConicProblem {
    let num_uavs = moments.num_uavs();
    let num_gus = moments.num_gus();
    let vm = VarMap { num_uavs, num_gus };
    let noise = config.noise_power_w();
    let gamma_qos = qos_gamma(config.se_min);
    let fixed = config.fixed_power_w();
    let mut p = ConicProblem::new();

    // eta_sqrt variables, row-major; a link with zero average gain carries
    // nothing and is pinned so presolve removes it.
    for l in 0..num_uavs {
        for k in 0..num_gus {
            let tr = moments.w_norm_sq[(l, k)];
            let name = format!("eta_sqrt_{l}_{k}");
            if tr > 0.0 {
                let cap = (config.p_ap_dl / tr).sqrt();
                let scale = (config.p_ap_dl / (num_gus as f64 * tr)).sqrt();
                p.add_var(&name, Some(0.0), Some(cap), scale);
            } else {
                p.add_var(&name, Some(0.0), Some(0.0), 1.0);
            }
        }
    }
    for k in 0..num_gus {
        p.add_var(
            &format!("xi_{k}"),
            Some(0.0),
            None,
            state.xi[k].max(noise),
        );
    }
    for k in 0..num_gus {
        p.add_var(
            &format!("gamma_{k}"),
            Some(GAMMA_MIN),
            gamma_qos,
            state.gamma[k],
        );
    }
    let t_cap = fixed + num_uavs as f64 * config.p_ap_dl / config.amp_efficiency;
    p.add_var("t", Some(fixed), Some(t_cap), state.t);
    for k in 0..num_gus {
        p.add_var(&format!("r_{k}"), Some(0.0), None, state.r[k].max(1e-12));
    }

    let objective: Vec<(usize, f64)> = (0..num_gus).map(|k| (vm.r(k), 1.0)).collect();
    p.set_objective_max(&objective);

    // Per-UAV radiated-power budgets: sum_k tr_lk eta_lk^2 <= P_ap.
    for l in 0..num_uavs {
        let rows: Vec<Vec<(usize, f64)>> = (0..num_gus)
            .map(|k| vec![(vm.eta(l, k), moments.w_norm_sq[(l, k)].sqrt())])
            .collect();
        p.add_quadratic_le(rows, &[], config.p_ap_dl, &format!("budget_{l}"));
    }

    // Consumed-power definition: radiated/eff + fixed <= t.
    let power_rows: Vec<Vec<(usize, f64)>> = (0..num_uavs)
        .flat_map(|l| {
            (0..num_gus).map(move |k| (l, k))
        })
        .map(|(l, k)| {
            vec![(
                vm.eta(l, k),
                (moments.w_norm_sq[(l, k)] / config.amp_efficiency).sqrt(),
            )]
        })
        .collect();
    p.add_quadratic_le(power_rows, &[(vm.t(), -1.0)], -fixed, "power_total");

    // Interference bounds: sum_i ||cfac_ki^H eta_i||^2 + B_k + noise <= xi_k.
    // Complex factors split into independent real and imaginary rows, valid
    // because the power variables are real.
    for k in 0..num_gus {
        let sat = moments.sat_interference(k, &state.eta_sn);
        let mut rows = Vec::new();
        for i in 0..num_gus {
            let fac = &moments.cfac[k][i];
            for m in 0..num_uavs {
                let re: Vec<(usize, f64)> = (0..num_uavs)
                    .map(|l| (vm.eta(l, i), fac[(l, m)].re))
                    .collect();
                let im: Vec<(usize, f64)> = (0..num_uavs)
                    .map(|l| (vm.eta(l, i), fac[(l, m)].im))
                    .collect();
                rows.push(re);
                rows.push(im);
            }
        }
        p.add_quadratic_le(
            rows,
            &[(vm.xi(k), -1.0)],
            -(sat + noise),
            &format!("interference_{k}"),
        );
    }

    // Signal constraints: linearized fraction <= signal tangent plus the
    // frozen satellite contribution.
    for k in 0..num_gus {
        let b_k = DVector::from_iterator(
            num_uavs,
            (0..num_uavs).map(|l| moments.b[k][k][l].re),
        );
        let eta_bar_k = DVector::from_iterator(
            num_uavs,
            (0..num_uavs).map(|l| state.eta_sqrt[(l, k)]),
        );
        let tangent = linearize_signal_quadratic(&b_k, &eta_bar_k);
        let fraction = linearize_fraction(state.xi[k], state.gamma[k]);
        let sat_const = state.eta_sn[k] * moments.sat_signal[k] * moments.sat_signal[k];
        let mut terms = vec![
            (vm.xi(k), fraction.d_xi()),
            (vm.gamma(k), fraction.d_gamma()),
        ];
        for l in 0..num_uavs {
            terms.push((vm.eta(l, k), -tangent.coeffs[l]));
        }
        // fraction(xi, gamma) <= tangent(eta) + sat_const, with the
        // fraction's constant part const_f moved to the right-hand side.
        let const_f = state.xi[k] / state.gamma[k]
            - fraction.d_xi() * state.xi[k]
            - fraction.d_gamma() * state.gamma[k];
        p.add_affine_le(
            &terms,
            sat_const + tangent.offset - const_f,
            &format!("signal_{k}"),
        );
    }

    // Rate constraints: r_k <= tangent of log2(1 + 1/gamma)/t.
    for k in 0..num_gus {
        let sur = linearize_rate_over_power(state.gamma[k], state.t);
        let const_r = sur.value_bar - sur.d_gamma * sur.gamma_bar - sur.d_t * sur.t_bar;
        p.add_affine_le(
            &[(vm.r(k), 1.0), (vm.gamma(k), -sur.d_gamma), (vm.t(), -sur.d_t)],
            const_r,
            &format!("rate_{k}"),
        );
    }

    p
}

// ---------------------------------------------------------------------------
// Outer loop
// ---------------------------------------------------------------------------

/// Why the approximation loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaTermination {
    /// Relative objective change fell below the stopping tolerance.
    Converged { iters: usize },
    /// Iteration cap reached; best iterate returned.
    MaxIters,
    /// A subproblem was reported infeasible or unbounded; best iterate
    /// returned. Does not occur for feasible starts except under severe
    /// numerical stress, since every expansion point satisfies its own
    /// subproblem.
    SubproblemInfeasible,
}

/// Result of one optimization run.
#[derive(Debug, Clone)]
pub struct ScaOutcome {
    /// Best allocation found (at least as good as the start).
    pub alloc: PowerAllocation,
    /// Closed-form performance of `alloc`.
    pub report: PerformanceReport,
    /// Achieved energy efficiency after each iteration, starting with the
    /// surrogate value at the initial expansion point, bit/s/Hz/W.
    pub trace: Vec<f64>,
    /// Why the loop stopped.
    pub termination: ScaTermination,
}

/// Optimization failures.
#[derive(Debug, Error)]
pub enum ScaError {
    /// Starting allocation violates budgets or QoS.
    #[error("starting allocation infeasible: {0}")]
    Start(String),
    /// The conic backend failed outright.
    #[error(transparent)]
    Solver(#[from] SolveError),
}

/// Relative objective change is below `epsilon`.
pub fn converged(previous: f64, current: f64, epsilon: f64) -> bool {
    (current - previous).abs() <= epsilon * current.abs().max(f64::MIN_POSITIVE)
}

/// Squares the stepped square-root powers, caps any budget overshoot, and
/// refits every auxiliary to its true value at the resulting allocation.
/// The refit `gamma = 1/SINR` makes `sum_k r_k` the achieved efficiency.
fn refit(
    eta_sqrt: DMatrix<f64>,
    eta_sn: &[f64],
    moments: &PrecodingMoments,
    config: &ScenarioConfig,
) -> (ScaIterate, PerformanceReport) {
    let mut eta_sqrt = eta_sqrt;
    for l in 0..moments.num_uavs() {
        let radiated: f64 = (0..moments.num_gus())
            .map(|k| moments.w_norm_sq[(l, k)] * eta_sqrt[(l, k)] * eta_sqrt[(l, k)])
            .sum();
        if radiated > config.p_ap_dl {
            let shrink = (config.p_ap_dl / radiated).sqrt();
            for k in 0..moments.num_gus() {
                eta_sqrt[(l, k)] *= shrink;
            }
        }
    }
    let alloc = PowerAllocation {
        eta_ap: eta_sqrt.map(|v| v * v),
        eta_sn: eta_sn.to_vec(),
    };
    let report = performance::energy_efficiency(&alloc, moments, config);
    let noise = config.noise_power_w();
    let gamma_qos = qos_gamma(config.se_min);
    let num_gus = moments.num_gus();
    let mut gamma = Vec::with_capacity(num_gus);
    let mut xi = Vec::with_capacity(num_gus);
    let mut r = Vec::with_capacity(num_gus);
    for k in 0..num_gus {
        let sinr = report.sinr[k];
        let mut g = (1.0 / sinr.max(1.0 / GAMMA_CAP)).max(GAMMA_MIN);
        if let Some(cap) = gamma_qos {
            g = g.min(cap);
        }
        gamma.push(g);
        xi.push(interference_power(k, &eta_sqrt, eta_sn, moments, noise));
        r.push((1.0 + 1.0 / g).log2() / report.p_tot);
    }
    let state = ScaIterate {
        eta_sqrt,
        eta_sn: eta_sn.to_vec(),
        xi,
        gamma,
        t: report.p_tot,
        r,
    };
    (state, report)
}

/// Maximizes downlink energy efficiency over the UAV power coefficients by
/// successive convex approximation, starting from a feasible allocation.
/// The satellite powers in `init` stay frozen throughout. Deterministic.
pub fn sca_solve(
    config: &ScenarioConfig,
    moments: &PrecodingMoments,
    init: &PowerAllocation,
) -> Result<ScaOutcome, ScaError> {
    let alloc0 = init.effective(config.mode);
    alloc0
        .check_budgets(moments, config)
        .map_err(|e| ScaError::Start(e.to_string()))?;
    let noise = config.noise_power_w();
    for k in 0..moments.num_gus() {
        let se = performance::se_dl(performance::sinr_dl(k, &alloc0, moments, noise));
        if se < config.se_min - INVARIANT_SLACK {
            return Err(ScaError::Start(format!(
                "SE[{k}] = {se} below QoS floor {}",
                config.se_min
            )));
        }
    }

    let mut state = init_state(&alloc0, moments, config);
    debug_assert_eq!(state.validate(moments, config), Ok(()));
    let mut trace = vec![state.sum_r()];
    let init_report = performance::energy_efficiency(&alloc0, moments, config);
    let mut current_ee = init_report.ee;
    let mut best_alloc = alloc0.clone();
    let mut best_report = init_report;

    let mut termination = ScaTermination::MaxIters;
    for iter in 0..config.sca_max_iters {
        let problem = build_subproblem(&state, moments, config);
        let sol = conic::solve(&problem, conic::DEFAULT_TOLERANCE, conic::DEFAULT_ITERATION_CAP)?;
        match sol.status {
            SolveStatus::Optimal | SolveStatus::MaxIter => {}
            SolveStatus::Infeasible | SolveStatus::Unbounded => {
                termination = ScaTermination::SubproblemInfeasible;
                break;
            }
        }

        let num_uavs = moments.num_uavs();
        let num_gus = moments.num_gus();
        let eta_new = DMatrix::from_fn(num_uavs, num_gus, |l, k| {
            sol.values[l * num_gus + k].max(0.0)
        });

        // Damped step with refit: accept the largest step whose true
        // efficiency does not regress and whose QoS floor holds.
        let mut accepted = None;
        for &tau in &STEP_SCHEDULE {
            let stepped = DMatrix::from_fn(num_uavs, num_gus, |l, k| {
                state.eta_sqrt[(l, k)] + tau * (eta_new[(l, k)] - state.eta_sqrt[(l, k)])
            });
            let (candidate, report) = refit(stepped, &state.eta_sn, moments, config);
            let qos_ok = report
                .se
                .iter()
                .all(|&se| se >= config.se_min - INVARIANT_SLACK);
            if qos_ok && report.ee >= current_ee - 1e-9 * current_ee.abs() {
                accepted = Some((candidate, report));
                break;
            }
        }
        let Some((next, report)) = accepted else {
            // Even the smallest damped step regresses, so the accepted
            // update is the zero step: the objective change is exactly
            // zero and the stopping rule fires at this iteration.
            trace.push(*trace.last().unwrap());
            termination = ScaTermination::Converged { iters: iter + 1 };
            break;
        };
        debug_assert_eq!(next.validate(moments, config), Ok(()));

        state = next;
        current_ee = report.ee;
        if report.ee > best_report.ee {
            best_alloc = state.alloc();
            best_report = report;
        }
        let sum_r = state.sum_r();
        let previous = *trace.last().unwrap();
        trace.push(sum_r);
        if converged(previous, sum_r, config.sca_epsilon) {
            termination = ScaTermination::Converged { iters: iter + 1 };
            break;
        }
    }

    Ok(ScaOutcome {
        alloc: best_alloc,
        report: best_report,
        trace,
        termination,
    })
}

// ---------------------------------------------------------------------------
