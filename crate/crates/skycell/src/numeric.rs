//! Shared numerical kernels: Gauss–Hermite quadrature and Hermitian PSD
//! factorization.
//!
//! Both are small, deterministic building blocks used by the channel and
//! moment layers; neither carries any domain knowledge of its own.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Node count used for the angular-scattering integrals.
pub const GH_DEFAULT_NODES: usize = 64;

// ---------------------------------------------------------------------------
// Gauss–Hermite quadrature
// ---------------------------------------------------------------------------

/// Nodes and weights of the n-point Gauss–Hermite rule for weight e^{-x^2},
/// so that `sum_i w_i f(x_i) ~ integral f(x) e^{-x^2} dx`.
///
/// Golub–Welsch construction: the rule is the eigendecomposition of the
/// symmetric tridiagonal Jacobi matrix with zero diagonal and off-diagonal
/// entries sqrt(j/2), j = 1..n-1. Eigenvalues are the nodes; the weight of
/// node i is sqrt(pi) times the squared first component of its unit
/// eigenvector. Nodes are returned in ascending order.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "quadrature needs at least one node");
    if n == 1 {
        // Single-node rule: integral of e^{-x^2} is sqrt(pi), node at 0.
        return vec![(0.0, std::f64::consts::PI.sqrt())];
    }
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for j in 1..n {
        let off = (j as f64 / 2.0).sqrt();
        jacobi[(j - 1, j)] = off;
        jacobi[(j, j - 1)] = off;
    }
    let eig = jacobi.symmetric_eigen();
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let first = eig.eigenvectors[(0, i)];
            (node, sqrt_pi * first * first)
        })
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

/// The default rule, computed once and shared; the scattering covariance
/// evaluates one integral per matrix diagonal and reuses this table.
pub fn gauss_hermite_default() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(GH_DEFAULT_NODES))
}

// ---------------------------------------------------------------------------
// Hermitian PSD factorization
// ---------------------------------------------------------------------------

/// A matrix expected to be positive semidefinite had an eigenvalue too far
/// below zero to be explained by round-off.
#[derive(Debug, Clone, thiserror::Error)]
#[error(
    "matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e} \
     versus trace {trace:.3e} (tolerance {tolerance:.1e} relative)"
)]
pub struct IndefiniteError {
    pub min_eigenvalue: f64,
    pub trace: f64,
    pub tolerance: f64,
}

/// Factor a Hermitian PSD matrix as F F^H via its eigendecomposition.
///
/// Eigenvalues in [-tol_rel * tr(A), 0) are treated as quadrature round-off
/// and clipped to zero; anything more negative is a genuine indefiniteness
/// and is reported as an error rather than silently repaired.
pub fn hermitian_psd_factor(
    a: &DMatrix<Complex64>,
    tol_rel: f64,
) -> Result<DMatrix<Complex64>, IndefiniteError> {
    assert_eq!(a.nrows(), a.ncols(), "factorization needs a square matrix");
    let trace = a.trace().re;
    let eig = a.clone().symmetric_eigen();
    let floor = -tol_rel * trace.abs();
    let mut scaled = eig.eigenvectors;
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < floor {
            return Err(IndefiniteError {
                min_eigenvalue: lambda,
                trace,
                tolerance: tol_rel,
            });
        }
        let s = lambda.max(0.0).sqrt();
        scaled.column_mut(j).scale_mut(s);
    }
    Ok(scaled)
}

/// Trace of a product of two Hermitian matrices, which is always real.
pub fn trace_product_hermitian(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "trace product needs matching shapes");
    let mut acc = 0.0;
    for m in 0..a.nrows() {
        for n in 0..a.ncols() {
            // tr(AB) = sum_{m,n} A_{mn} B_{nm}; for Hermitian inputs the
            // imaginary parts cancel pairwise.
            acc += (a[(m, n)] * b[(n, m)]).re;
        }
    }
    acc
}

/// Squared Euclidean norm of a complex vector.
pub fn norm_sq(v: &DVector<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_hermite_two_nodes_is_analytic() {
        // H_2 roots are +-1/sqrt(2), both weights sqrt(pi)/2.
        let rule = gauss_hermite(2);
        let s = 0.5_f64.sqrt();
        assert_relative_eq!(rule[0].0, -s, max_relative = 1e-12);
        assert_relative_eq!(rule[1].0, s, max_relative = 1e-12);
        let half = std::f64::consts::PI.sqrt() / 2.0;
        assert_relative_eq!(rule[0].1, half, max_relative = 1e-12);
        assert_relative_eq!(rule[1].1, half, max_relative = 1e-12);
    }

    #[test]
    fn gauss_hermite_integrates_low_moments_exactly() {
        // integral e^{-x^2} dx = sqrt(pi); integral x^2 e^{-x^2} dx = sqrt(pi)/2.
        let rule = gauss_hermite(8);
        let total: f64 = rule.iter().map(|&(_, w)| w).sum();
        let second: f64 = rule.iter().map(|&(x, w)| w * x * x).sum();
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert_relative_eq!(total, sqrt_pi, max_relative = 1e-12);
        assert_relative_eq!(second, sqrt_pi / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn gauss_hermite_default_is_64_nodes_and_normalized() {
        let rule = gauss_hermite_default();
        assert_eq!(rule.len(), GH_DEFAULT_NODES);
        let total: f64 = rule.iter().map(|&(_, w)| w).sum();
        assert_relative_eq!(total, std::f64::consts::PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn psd_factor_reconstructs_identity_and_diagonal() {
        let id = DMatrix::<Complex64>::identity(3, 3);
        let f = hermitian_psd_factor(&id, 1e-10).unwrap();
        let back = &f * f.adjoint();
        assert!((back - &id).norm() < 1e-12);

        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(4.0, 0.0),
            Complex64::new(0.25, 0.0),
        ]));
        let f = hermitian_psd_factor(&d, 1e-10).unwrap();
        let back = &f * f.adjoint();
        assert!((back - &d).norm() < 1e-12);
    }

    #[test]
    fn psd_factor_reconstructs_random_hermitian() {
        // Build an obviously PSD matrix B B^H and check the residual bound.
        let n = 5;
        let mut b = DMatrix::<Complex64>::zeros(n, n);
        let mut val: f64 = 0.3;
        for i in 0..n {
            for j in 0..n {
                val = (val * 7.13 + 0.19).fract();
                b[(i, j)] = Complex64::new(val - 0.5, (1.0 - val) * 0.4);
            }
        }
        let a = &b * b.adjoint();
        let f = hermitian_psd_factor(&a, 1e-10).unwrap();
        let back = &f * f.adjoint();
        assert!((back - &a).norm() / a.norm() < 1e-10);
    }

    #[test]
    fn psd_factor_rejects_indefinite_input() {
        let mut a = DMatrix::<Complex64>::identity(2, 2);
        a[(1, 1)] = Complex64::new(-1.0, 0.0);
        assert!(hermitian_psd_factor(&a, 1e-10).is_err());
    }

    #[test]
    fn trace_product_matches_direct_evaluation() {
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(0.5, 0.3),
                Complex64::new(0.5, -0.3),
                Complex64::new(1.0, 0.0),
            ],
        );
        let b = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(-0.2, 0.1),
                Complex64::new(-0.2, -0.1),
                Complex64::new(3.0, 0.0),
            ],
        );
        let direct = (&a * &b).trace();
        assert_relative_eq!(trace_product_hermitian(&a, &b), direct.re, max_relative = 1e-12);
        assert!(direct.im.abs() < 1e-12);
    }
}
