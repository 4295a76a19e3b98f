use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Smallest eigenvalue of the symmetrized matrix `(A + A^T) / 2`.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = (a + a.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `(lambda_min >= -tol, lambda_min)`; rejects matrices asymmetric beyond 1e-12.
pub fn psd_check(a: &DMatrix<f64>, tol: f64) -> Result<(bool, f64)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let asym = (a - a.transpose()).abs().max();
    let scale = 1.0f64.max(a.abs().max());
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let lam = min_eigenvalue(a);
    Ok((lam >= -tol, lam))
}

/// Largest `t` with `x + t dx` positive semidefinite, `f64::INFINITY` when
/// unbounded and 0 when `x` is not positive definite.
pub fn max_step_to_boundary(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(chol) = x.clone().cholesky() else {
        return 0.0;
    };
    let l = chol.l();
    // S = L^-1 dX L^-T
    let Some(left) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(s) = l.solve_lower_triangular(&left.transpose()) else {
        return 0.0;
    };
    let lam = min_eigenvalue(&s);
    if lam >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lam
    }
}
