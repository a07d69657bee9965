//! Solver-neutral conic subproblems and an interior-point backend.
//!
//! The power-allocation loop emits one convex subproblem per iteration:
//! a linear objective over affine inequalities and convex quadratic
//! inequalities (squared linear forms plus a linear part). This module
//! carries that description in [`ConicProblem`], lifts each quadratic
//! constraint into a second-order cone, and hands the result to Clarabel's
//! interior-point method.
//!
//! Raw subproblem data spans ~20 orders of magnitude (per-antenna channel
//! traces near 1e-10 next to squared-root powers near 1e4), which no
//! general-purpose solver survives unaided. Every variable therefore
//! carries a caller-supplied scale hint, and every constraint row is
//! normalized to unit peak coefficient before the backend runs; solutions
//! are mapped back to original units on return.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use thiserror::Error;

/// Default interior-point convergence tolerance (feasibility and gap).
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Default interior-point iteration cap.
pub const DEFAULT_ITERATION_CAP: u32 = 200;

// ---------------------------------------------------------------------------
// Problem description
// ---------------------------------------------------------------------------

/// One decision variable: name, optional box bounds, and a magnitude hint.
#[derive(Debug, Clone)]
struct VarDef {
    name: String,
    lower: Option<f64>,
    upper: Option<f64>,
    /// Expected magnitude of the variable in original units; the backend
    /// solves for `x / scale` so its iterates stay near unit order.
    scale: f64,
}

/// Affine inequality `sum_j coef_j x_j <= rhs`.
#[derive(Debug, Clone)]
struct AffineConstraint {
    terms: Vec<(usize, f64)>,
    rhs: f64,
    tag: String,
}

/// Convex quadratic inequality
/// `sum_r (row_r . x)^2 + sum_j lin_j x_j <= rhs`.
#[derive(Debug, Clone)]
struct QuadraticConstraint {
    rows: Vec<Vec<(usize, f64)>>,
    linear: Vec<(usize, f64)>,
    rhs: f64,
    tag: String,
}

/// Linear-objective problem over affine and convex quadratic inequalities.
#[derive(Debug, Clone, Default)]
pub struct ConicProblem {
    vars: Vec<VarDef>,
    objective: Vec<(usize, f64)>,
    affine: Vec<AffineConstraint>,
    quadratic: Vec<QuadraticConstraint>,
}

impl ConicProblem {
    /// Empty problem; populate with `add_var` and the constraint builders.
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a variable and returns its index. `scale` is the expected
    /// magnitude in original units and must be positive and finite.
    pub fn add_var(
        &mut self,
        name: &str,
        lower: Option<f64>,
        upper: Option<f64>,
        scale: f64,
    ) -> usize {
        assert!(
            scale.is_finite() && scale > 0.0,
            "variable {name}: scale hint must be positive and finite, got {scale}"
        );
        if let (Some(lo), Some(up)) = (lower, upper) {
            assert!(lo <= up, "variable {name}: lower bound {lo} exceeds upper {up}");
        }
        self.vars.push(VarDef { name: name.to_owned(), lower, upper, scale });
        self.vars.len() - 1
    }

    /// Sets the objective to `maximize sum_j coef_j x_j`.
    pub fn set_objective_max(&mut self, terms: &[(usize, f64)]) {
        self.objective = consolidate(terms, self.vars.len());
    }

    /// Adds `sum_j coef_j x_j <= rhs`, labelled `tag` for diagnostics.
    pub fn add_affine_le(&mut self, terms: &[(usize, f64)], rhs: f64, tag: &str) {
        let terms = consolidate(terms, self.vars.len());
        assert!(!terms.is_empty(), "constraint {tag}: no variable terms");
        self.affine.push(AffineConstraint { terms, rhs, tag: tag.to_owned() });
    }

    /// Adds `sum_r (row_r . x)^2 + sum_j lin_j x_j <= rhs`. Each `row` is a
    /// sparse linear form whose square contributes to the left-hand side.
    pub fn add_quadratic_le(
        &mut self,
        rows: Vec<Vec<(usize, f64)>>,
        linear: &[(usize, f64)],
        rhs: f64,
        tag: &str,
    ) {
        let rows: Vec<Vec<(usize, f64)>> = rows
            .into_iter()
            .map(|row| consolidate(&row, self.vars.len()))
            .filter(|row| !row.is_empty())
            .collect();
        let linear = consolidate(linear, self.vars.len());
        assert!(
            !rows.is_empty() || !linear.is_empty(),
            "constraint {tag}: no variable terms"
        );
        self.quadratic.push(QuadraticConstraint { rows, linear, rhs, tag: tag.to_owned() });
    }

    /// Number of registered variables.
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    /// Number of constraints (affine plus quadratic), excluding bounds.
    pub fn num_constraints(&self) -> usize {
        self.affine.len() + self.quadratic.len()
    }

    /// Plain-text rendering of the full problem, one line per variable and
    /// per constraint, in original (unscaled) units.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str("maximize ");
        if self.objective.is_empty() {
            out.push('0');
        } else {
            out.push_str(&linear_text(&self.objective, &self.vars));
        }
        out.push('\n');
        out.push_str("variables:\n");
        for v in &self.vars {
            let lo = v.lower.map_or("-inf".to_owned(), |b| format!("{b:.6e}"));
            let up = v.upper.map_or("+inf".to_owned(), |b| format!("{b:.6e}"));
            let _ = writeln!(out, "  {} in [{lo}, {up}] scale={:.3e}", v.name, v.scale);
        }
        out.push_str("subject to:\n");
        for c in &self.affine {
            let _ = writeln!(
                out,
                "  [{}] {} <= {:.6e}",
                c.tag,
                linear_text(&c.terms, &self.vars),
                c.rhs
            );
        }
        for c in &self.quadratic {
            let rows: Vec<String> =
                c.rows.iter().map(|row| linear_text(row, &self.vars)).collect();
            let mut lhs = format!("||({})||^2", rows.join("; "));
            if !c.linear.is_empty() {
                lhs.push_str(" + ");
                lhs.push_str(&linear_text(&c.linear, &self.vars));
            }
            let _ = writeln!(out, "  [{}] {lhs} <= {:.6e}", c.tag, c.rhs);
        }
        out
    }
}

/// Merges duplicate variable indices, drops exact zeros, bounds-checks.
fn consolidate(terms: &[(usize, f64)], num_vars: usize) -> Vec<(usize, f64)> {
    let mut map: BTreeMap<usize, f64> = BTreeMap::new();
    for &(j, c) in terms {
        assert!(j < num_vars, "term references variable {j}, only {num_vars} declared");
        assert!(c.is_finite(), "non-finite coefficient {c} on variable {j}");
        *map.entry(j).or_insert(0.0) += c;
    }
    map.into_iter().filter(|&(_, c)| c != 0.0).collect()
}

/// Renders a sparse linear form as `c0*name0 + c1*name1 + ...`.
fn linear_text(terms: &[(usize, f64)], vars: &[VarDef]) -> String {
    let parts: Vec<String> = terms
        .iter()
        .map(|&(j, c)| format!("{c:.6e}*{}", vars[j].name))
        .collect();
    parts.join(" + ")
}

// ---------------------------------------------------------------------------
// Solutions and errors
// ---------------------------------------------------------------------------

/// Terminal state of one interior-point solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Converged to the requested (or reduced, see `achieved_tol`) accuracy.
    Optimal,
    /// Certificate of primal infeasibility found.
    Infeasible,
    /// Certificate of dual infeasibility (objective unbounded above).
    Unbounded,
    /// Iteration cap reached; `values` hold the best iterate found.
    MaxIter,
}

/// Result of solving a [`ConicProblem`], reported in original units.
#[derive(Debug, Clone)]
pub struct ConicSolution {
    /// Per-variable values. A feasible point only when `status` is
    /// `Optimal`; for `MaxIter` it is the last iterate, for the
    /// infeasible/unbounded statuses a certificate direction.
    pub values: Vec<f64>,
    /// Objective `sum_j c_j values_j` recomputed in original units.
    pub objective: f64,
    /// How the solve terminated.
    pub status: SolveStatus,
    /// Worst of primal residual, dual residual, and relative gap at exit.
    /// At most the requested tolerance for a full-accuracy solve; larger
    /// when the backend settled for reduced accuracy.
    pub achieved_tol: f64,
}

/// Failure to produce even a partial solution.
#[derive(Debug, Error)]
pub enum SolveError {
    /// Backend rejected the assembled problem data.
    #[error("conic backend rejected problem: {0}")]
    Setup(String),
    /// Backend aborted without a usable iterate.
    #[error("conic backend aborted: {0}")]
    Numerical(String),
}

// ---------------------------------------------------------------------------
// Presolve and scaling
// ---------------------------------------------------------------------------

/// Reduced problem after removing fixed variables and rescaling.
struct Prepared {
    /// Map from original index to reduced index (None when fixed).
    reduced_index: Vec<Option<usize>>,
    /// Fixed value per original variable (None when free).
    fixed: Vec<Option<f64>>,
    /// Scale of each reduced variable (original = scale * backend value).
    scale: Vec<f64>,
    /// Bounds of reduced variables, in backend units.
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
    /// Objective over reduced variables, backend units.
    objective: Vec<(usize, f64)>,
    /// Affine rows: (terms, rhs) after substitution, rescaling, and row
    /// normalization.
    affine: Vec<(Vec<(usize, f64)>, f64)>,
    /// Quadratic rows: (squared forms, linear part, rhs), same treatment
    /// (squared forms carry the square root of the row normalizer).
    quadratic: Vec<(Vec<Vec<(usize, f64)>>, Vec<(usize, f64)>, f64)>,
    /// Constant constraints rendered infeasible by substitution, with the
    /// violated tag.
    constant_violation: Option<String>,
}

impl Prepared {
    fn from_problem(p: &ConicProblem) -> Self {
        let n = p.vars.len();
        let mut reduced_index = vec![None; n];
        let mut fixed = vec![None; n];
        let mut scale = Vec::new();
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let mut next = 0usize;
        for (j, v) in p.vars.iter().enumerate() {
            if let (Some(lo), Some(up)) = (v.lower, v.upper) {
                if lo == up {
                    fixed[j] = Some(lo);
                    continue;
                }
            }
            reduced_index[j] = Some(next);
            scale.push(v.scale);
            lower.push(v.lower.map(|b| b / v.scale));
            upper.push(v.upper.map(|b| b / v.scale));
            next += 1;
        }

        // Substitute fixed values and move variables to backend units:
        // x_j = scale_j * xhat_j multiplies every coefficient by scale_j.
        let substitute = |terms: &[(usize, f64)], rhs: &mut f64| -> Vec<(usize, f64)> {
            let mut out = Vec::with_capacity(terms.len());
            for &(j, c) in terms {
                match reduced_index[j] {
                    Some(r) => out.push((r, c * p.vars[j].scale)),
                    None => *rhs -= c * fixed[j].unwrap(),
                }
            }
            out
        };

        let mut constant_violation = None;
        let mut affine = Vec::with_capacity(p.affine.len());
        for c in &p.affine {
            let mut rhs = c.rhs;
            let mut terms = substitute(&c.terms, &mut rhs);
            if terms.is_empty() {
                if rhs < -CONSTANT_FEASIBILITY_SLACK && constant_violation.is_none() {
                    constant_violation = Some(c.tag.clone());
                }
                continue;
            }
            let norm = terms.iter().map(|&(_, c)| c.abs()).fold(0.0, f64::max);
            for t in &mut terms {
                t.1 /= norm;
            }
            affine.push((terms, rhs / norm));
        }

        let mut quadratic = Vec::with_capacity(p.quadratic.len());
        for c in &p.quadratic {
            let mut rhs = c.rhs;
            let linear = substitute(&c.linear, &mut rhs);
            let mut rows = Vec::with_capacity(c.rows.len());
            for row in &c.rows {
                // A fixed variable inside a squared form would add an affine
                // offset the lifting below cannot carry; the subproblem
                // builder never produces one, so reject loudly.
                let mut offset = 0.0;
                let reduced = substitute(row, &mut offset);
                assert!(
                    offset == 0.0,
                    "constraint {}: fixed variable inside a squared form",
                    c.tag
                );
                if !reduced.is_empty() {
                    rows.push(reduced);
                }
            }
            if rows.is_empty() && linear.is_empty() {
                if rhs < -CONSTANT_FEASIBILITY_SLACK && constant_violation.is_none() {
                    constant_violation = Some(c.tag.clone());
                }
                continue;
            }
            let row_peak = rows
                .iter()
                .flat_map(|row| row.iter().map(|&(_, c)| c.abs()))
                .fold(0.0, f64::max);
            let lin_peak = linear.iter().map(|&(_, c)| c.abs()).fold(0.0, f64::max);
            // Dividing the whole constraint by rho scales squared-form
            // coefficients by 1/sqrt(rho) and everything else by 1/rho.
            let rho = f64::max(row_peak * row_peak, lin_peak);
            let root = rho.sqrt();
            let rows: Vec<Vec<(usize, f64)>> = rows
                .into_iter()
                .map(|row| row.into_iter().map(|(j, c)| (j, c / root)).collect())
                .collect();
            let linear: Vec<(usize, f64)> =
                linear.into_iter().map(|(j, c)| (j, c / rho)).collect();
            quadratic.push((rows, linear, rhs / rho));
        }

        let mut rhs_unused = 0.0;
        let mut objective = substitute(&p.objective, &mut rhs_unused);
        let obj_peak = objective.iter().map(|&(_, c)| c.abs()).fold(0.0, f64::max);
        if obj_peak > 0.0 {
            for t in &mut objective {
                t.1 /= obj_peak;
            }
        }

        Prepared {
            reduced_index,
            fixed,
            scale,
            lower,
            upper,
            objective,
            affine,
            quadratic,
            constant_violation,
        }
    }

    fn num_reduced(&self) -> usize {
        self.scale.len()
    }

    /// Maps backend values back to original units, restoring fixed entries.
    fn scatter(&self, reduced: &[f64]) -> Vec<f64> {
        self.reduced_index
            .iter()
            .zip(&self.fixed)
            .map(|(idx, fix)| match idx {
                Some(r) => reduced[*r] * self.scale[*r],
                None => fix.unwrap(),
            })
            .collect()
    }
}

/// Absolute slack when checking constraints that became constant after
/// substituting fixed variables.
const CONSTANT_FEASIBILITY_SLACK: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Cone assembly and backend
// ---------------------------------------------------------------------------

/// Sparse triplet accumulator converted to compressed sparse columns.
fn csc_from_triplets(m: usize, n: usize, mut trips: Vec<(usize, usize, f64)>) -> CscMatrix<f64> {
    trips.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    let mut colptr = vec![0usize; n + 1];
    let mut rowval: Vec<usize> = Vec::with_capacity(trips.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(trips.len());
    let mut last = None;
    for (row, col, val) in trips {
        debug_assert!(row < m && col < n);
        if last == Some((row, col)) {
            // Duplicate entry: accumulate. Construction above never
            // produces one, but merging keeps the converter total.
            *nzval.last_mut().unwrap() += val;
            continue;
        }
        rowval.push(row);
        nzval.push(val);
        colptr[col + 1] += 1;
        last = Some((row, col));
    }
    for c in 0..n {
        colptr[c + 1] += colptr[c];
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

/// Solves `problem` to tolerance `tol` within `iteration_cap` interior-point
/// steps. Deterministic: identical inputs produce identical outputs.
pub fn solve(
    problem: &ConicProblem,
    tol: f64,
    iteration_cap: u32,
) -> Result<ConicSolution, SolveError> {
    assert!(problem.num_vars() > 0, "conic problem has no variables");
    assert!(tol > 0.0 && tol.is_finite(), "tolerance must be positive, got {tol}");
    let prep = Prepared::from_problem(problem);

    let finish = |reduced: &[f64], status: SolveStatus, achieved: f64| ConicSolution {
        values: {
            let v = prep.scatter(reduced);
            debug_assert_eq!(v.len(), problem.num_vars());
            v
        },
        objective: {
            let v = prep.scatter(reduced);
            problem.objective.iter().map(|&(j, c)| c * v[j]).sum()
        },
        status,
        achieved_tol: achieved,
    };

    if let Some(tag) = &prep.constant_violation {
        let _ = tag; // tag retained in dump(); status alone suffices here
        return Ok(finish(&vec![0.0; prep.num_reduced()], SolveStatus::Infeasible, 0.0));
    }
    if prep.num_reduced() == 0 {
        // Everything fixed by presolve; the constant constraints were
        // checked above, so the unique point is optimal.
        return Ok(finish(&[], SolveStatus::Optimal, 0.0));
    }

    let n = prep.num_reduced();
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    let mut row = 0usize;

    // Nonnegative block: affine constraints, then bounds. Order is fixed so
    // reassembled problems are bit-identical.
    let mut nonneg = 0usize;
    for (terms, rhs) in &prep.affine {
        for &(j, c) in terms {
            trips.push((row, j, c));
        }
        b.push(*rhs);
        row += 1;
        nonneg += 1;
    }
    for j in 0..n {
        if let Some(up) = prep.upper[j] {
            trips.push((row, j, 1.0));
            b.push(up);
            row += 1;
            nonneg += 1;
        }
        if let Some(lo) = prep.lower[j] {
            trips.push((row, j, -1.0));
            b.push(-lo);
            row += 1;
            nonneg += 1;
        }
    }
    if nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(nonneg));
    }

    // One second-order cone per quadratic constraint via the standard
    // lifting: ||z||^2 <= s  <=>  (s + 1, 2 z, s - 1) in SOC(dim z + 2),
    // with s = rhs - lin.x and z_r = row_r . x.
    for (rows, linear, rhs) in &prep.quadratic {
        let dim = rows.len() + 2;
        // First cone element s + 1 = (rhs + 1) - lin.x.
        for &(j, c) in linear {
            trips.push((row, j, c));
        }
        b.push(rhs + 1.0);
        row += 1;
        // Middle elements 2 z_r = 0 - (-2 row_r).x.
        for rvec in rows {
            for &(j, c) in rvec {
                trips.push((row, j, -2.0 * c));
            }
            b.push(0.0);
            row += 1;
        }
        // Last element s - 1 = (rhs - 1) - lin.x.
        for &(j, c) in linear {
            trips.push((row, j, c));
        }
        b.push(rhs - 1.0);
        row += 1;
        cones.push(SupportedConeT::SecondOrderConeT(dim));
    }

    let m = row;
    let a_mat = csc_from_triplets(m, n, trips);
    let p_mat = CscMatrix::new(n, n, vec![0usize; n + 1], Vec::new(), Vec::new());
    // Backend minimizes; negate to maximize.
    let mut q = vec![0.0; n];
    for &(j, c) in &prep.objective {
        q[j] = -c;
    }

    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(iteration_cap)
        .tol_feas(tol)
        .tol_gap_rel(tol)
        .tol_gap_abs(tol)
        .build()
        .map_err(|e| SolveError::Setup(e.to_string()))?;
    let mut solver = DefaultSolver::new(&p_mat, &q, &a_mat, &b, &cones, settings)
        .map_err(|e| SolveError::Setup(format!("{e:?}")))?;
    solver.solve();

    let sol = &solver.solution;
    let rel_gap = (sol.obj_val - sol.obj_val_dual).abs() / f64::max(1.0, sol.obj_val.abs());
    let achieved = sol.r_prim.max(sol.r_dual).max(rel_gap);
    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SolveStatus::Infeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            SolveStatus::Unbounded
        }
        SolverStatus::MaxIterations
        | SolverStatus::MaxTime
        | SolverStatus::InsufficientProgress => SolveStatus::MaxIter,
        SolverStatus::Unsolved | SolverStatus::CallbackTerminated => {
            return Err(SolveError::Numerical(format!("{:?}", sol.status)));
        }
        SolverStatus::NumericalError => {
            return Err(SolveError::Numerical("interior-point numerical error".into()));
        }
    };
    Ok(finish(&sol.x, status, achieved))
}

/// Like [`solve`], with a starting point in original units. The backend is a
/// homogeneous interior-point method without warm-starting, so the hint is
/// validated for shape and otherwise ignored; results never depend on it.
pub fn solve_with_start(
    problem: &ConicProblem,
    start: &[f64],
    tol: f64,
    iteration_cap: u32,
) -> Result<ConicSolution, SolveError> {
    assert_eq!(
        start.len(),
        problem.num_vars(),
        "starting point length mismatches variable count"
    );
    solve(problem, tol, iteration_cap)
}

// ---------------------------------------------------------------------------
