//! The solver-neutral conic layer on its own.
//!
//! Builds two small problems by hand - a linear program and a quadratically
//! constrained one with an analytic answer - solves them through the same
//! interface the optimizer uses, and prints the problem dumps. Variable
//! scale hints and tagged constraints are the two features the power
//! subproblems lean on: coefficients there span twenty orders of magnitude.
//!
//! Run with: cargo run --example conic_subproblem

use skycell::conic::{solve, ConicProblem, DEFAULT_ITERATION_CAP, DEFAULT_TOLERANCE};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    // maximize 3x + 4y subject to x^2 + y^2 <= 1: optimum 5 at (0.6, 0.8).
    let mut ball = ConicProblem::default();
    let x = ball.add_var("x", None, None, 1.0);
    let y = ball.add_var("y", None, None, 1.0);
    ball.set_objective_max(&[(x, 3.0), (y, 4.0)]);
    ball.add_quadratic_le(vec![vec![(x, 1.0)], vec![(y, 1.0)]], &[], 1.0, "unit_ball");

    println!("{}", ball.dump());
    let sol = solve(&ball, DEFAULT_TOLERANCE, DEFAULT_ITERATION_CAP)?;
    println!(
        "status {:?}: objective {:.9} at ({:.6}, {:.6}), expected 5 at (0.6, 0.8)\n",
        sol.status, sol.objective, sol.values[x], sol.values[y]
    );

    // Same geometry the power subproblems have: minimize a budget-like
    // variable t covering a quadratic, with physical units mixed in.
    // minimize t s.t. (1e-6 u)^2 <= 1e-13 t, u >= 1e-1; the scale hints tell
    // the backend what "order one" means for each variable.
    let mut units = ConicProblem::default();
    let u = units.add_var("u", Some(0.1), None, 0.1);
    let t = units.add_var("t", Some(0.0), None, 1e-1);
    units.set_objective_max(&[(t, -1.0)]);
    units.add_quadratic_le(vec![vec![(u, 1e-6)]], &[(t, -1e-13)], 0.0, "power_cover");

    println!("{}", units.dump());
    let sol = solve(&units, DEFAULT_TOLERANCE, DEFAULT_ITERATION_CAP)?;
    // At the optimum u sits on its bound and t = (1e-6 * 0.1)^2 / 1e-13 = 0.1.
    println!(
        "status {:?}: u = {:.6e}, t = {:.6e}, expected u = 1e-1, t = 1e-1",
        sol.status, sol.values[u], sol.values[t]
    );
    println!(
        "achieved tolerance {:.2e} despite the 1e-13 coefficient: per-variable \
         scales plus per-row normalization keep the backend numerics near one",
        sol.achieved_tol
    );

    Ok(())
}
