use nalgebra::DMatrix;

use super::MomentSequence;
use crate::error::{Error, Result};
use crate::poly::{monomial_basis, Polynomial};
use crate::sdp::min_eigenvalue;

/// Linear dependence of a symmetric matrix on a moment vector.
///
/// Entry `(i, j)` with `i <= j` equals `sum coeff * y[index]` over its list.
#[derive(Clone, Debug)]
pub struct MatrixPattern {
    dim: usize,
    num_vars: usize,
    required_degree: u32,
    upper: Vec<Vec<(usize, f64)>>,
}

impl MatrixPattern {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Highest moment degree referenced.
    pub fn required_degree(&self) -> u32 {
        self.required_degree
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.dim - i * (i + 1) / 2 + j
    }

    pub fn entry(&self, i: usize, j: usize) -> &[(usize, f64)] {
        &self.upper[self.slot(i, j)]
    }

    /// `(i, j, terms)` over the upper triangle, row-major.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, &[(usize, f64)])> + '_ {
        (0..self.dim).flat_map(move |i| (i..self.dim).map(move |j| (i, j, self.entry(i, j))))
    }

    pub fn evaluate(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, terms) in self.upper_entries() {
            let v: f64 = terms.iter().map(|&(k, c)| c * y[k]).sum();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }
}

/// Localizing order `r - ceil(deg p / 2)`, or `None` when negative.
pub fn localizing_order(r: u32, p: &Polynomial) -> Option<u32> {
    r.checked_sub(p.degree().div_ceil(2))
}

pub fn moment_pattern(num_vars: usize, r: u32) -> MatrixPattern {
    localizing_pattern(&Polynomial::constant(num_vars, 1.0), r)
}

/// Pattern of `M_r(y; p)` with entries `L_y(p x^(a_i + a_j))`.
pub fn localizing_pattern(p: &Polynomial, r: u32) -> MatrixPattern {
    let n = p.num_vars();
    let basis = monomial_basis(n, r);
    let dim = basis.len();
    let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
    for i in 0..dim {
        for j in i..dim {
            let base = basis[i].mul(&basis[j]);
            let terms = p
                .terms()
                .map(|(g, c)| (crate::poly::grevlex_rank(&g.mul(&base), n).unwrap() - 1, c))
                .collect();
            upper.push(terms);
        }
    }
    MatrixPattern {
        dim,
        num_vars: n,
        required_degree: 2 * r + p.degree(),
        upper,
    }
}

fn check_vars(y: &MomentSequence, n: usize) -> Result<()> {
    if y.num_vars() != n {
        return Err(Error::DimensionMismatch {
            expected: y.num_vars(),
            got: n,
        });
    }
    Ok(())
}

fn check_degree(y: &MomentSequence, required: u32) -> Result<()> {
    if y.max_degree() < required {
        return Err(Error::MissingMoments {
            available: y.max_degree(),
            required,
        });
    }
    Ok(())
}

/// `M_r(y)`, of side `binomial(n + r, n)`.
pub fn moment_matrix(y: &MomentSequence, r: u32) -> Result<DMatrix<f64>> {
    check_degree(y, 2 * r)?;
    Ok(moment_pattern(y.num_vars(), r).evaluate(y.values()))
}

/// `M_r(y; p)`, of side `binomial(n + r, n)`.
pub fn localizing_matrix(y: &MomentSequence, p: &Polynomial, r: u32) -> Result<DMatrix<f64>> {
    check_vars(y, p.num_vars())?;
    check_degree(y, 2 * r + p.degree())?;
    Ok(localizing_pattern(p, r).evaluate(y.values()))
}

/// Eigenvalue evidence for the necessary representing-measure conditions.
#[derive(Clone, Debug)]
pub struct MeasureCheck {
    pub passed: bool,
    pub moment_min_eig: f64,
    /// One entry per constraint; `None` when the localizing order is negative.
    pub localizing_min_eigs: Vec<Option<f64>>,
}

/// Tests `M_r(y) >= -tol` and `M_{r - ceil(deg g / 2)}(y; g) >= -tol` for each
/// constraint `g >= 0`.
pub fn representing_measure_check(
    y: &MomentSequence,
    constraints: &[Polynomial],
    r: u32,
    tol: f64,
) -> Result<MeasureCheck> {
    let moment_min_eig = min_eigenvalue(&moment_matrix(y, r)?);
    let mut passed = moment_min_eig >= -tol;
    let mut localizing_min_eigs = Vec::with_capacity(constraints.len());
    for g in constraints {
        match localizing_order(r, g) {
            Some(order) => {
                let lam = min_eigenvalue(&localizing_matrix(y, g, order)?);
                passed &= lam >= -tol;
                localizing_min_eigs.push(Some(lam));
            }
            None => localizing_min_eigs.push(None),
        }
    }
    Ok(MeasureCheck {
        passed,
        moment_min_eig,
        localizing_min_eigs,
    })
}

/// Exponent labels for a moment index, e.g. `"11"` for `y_11`. Test helper
/// for comparing against written-out matrix layouts.
#[cfg(test)]
pub(crate) fn label(num_vars: usize, max_degree: u32, index: usize) -> String {
    let b: Vec<crate::poly::Monomial> = monomial_basis(num_vars, max_degree);
    b[index]
        .exponents()
        .iter()
        .map(|e| e.to_string())
        .collect::<String>()
}
