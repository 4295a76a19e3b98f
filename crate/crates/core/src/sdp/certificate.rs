//! Recomputes the optimality measures of a solution from the original
//! problem data, without using any solver internals.

use nalgebra::{DMatrix, DVector};

use super::problem::SdpProblem;
use super::psd::min_eigenvalue;
use super::solver::SdpSolution;

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    /// Worst relative cone violation or equality residual of `x`.
    pub primal_residual: f64,
    /// Relative norm of the Lagrangian gradient, with equality multipliers
    /// fitted by least squares.
    pub dual_residual: f64,
    /// Relative complementarity `sum F_j(x).X_j + h(x).lambda`.
    pub gap: f64,
    pub dual_objective: f64,
    pub equality_multipliers: Vec<f64>,
}

pub(crate) fn primal_scale(problem: &SdpProblem) -> f64 {
    let blocks = problem
        .blocks
        .iter()
        .map(|b| b.constant_matrix().norm())
        .fold(0.0, f64::max);
    let ineq = problem
        .inequalities
        .iter()
        .map(|e| e.constant * e.constant)
        .sum::<f64>()
        .sqrt();
    1.0 + blocks.max(ineq)
}

pub(crate) fn dual_scale(problem: &SdpProblem) -> f64 {
    1.0 + problem
        .objective
        .terms
        .iter()
        .map(|t| t.1 * t.1)
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn equality_residual(problem: &SdpProblem, x: &[f64]) -> f64 {
    problem
        .equalities
        .iter()
        .map(|e| {
            let scale =
                1.0 + e.constant.abs() + e.terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
            e.evaluate(x).abs() / scale
        })
        .fold(0.0, f64::max)
}

pub fn check_certificate(problem: &SdpProblem, solution: &SdpSolution) -> Certificate {
    let x = &solution.x;
    let n = problem.num_vars;

    let mut violation: f64 = 0.0;
    for b in &problem.blocks {
        violation = violation.max(-min_eigenvalue(&b.evaluate(x)));
    }
    for e in &problem.inequalities {
        violation = violation.max(-e.evaluate(x));
    }
    let primal_residual =
        (violation.max(0.0) / primal_scale(problem)).max(equality_residual(problem, x));

    // gradient of c0 + c^T x - sum F_j(x).X_j - h(x).lambda
    let mut grad = DVector::<f64>::zeros(n);
    for &(i, c) in &problem.objective.terms {
        grad[i] += c;
    }
    let mut dual_obj = problem.objective.constant;
    let mut complementarity = 0.0;
    for (b, xd) in problem.blocks.iter().zip(&solution.block_duals) {
        for (i, j, e) in b.upper_entries() {
            let w = if i == j {
                xd[(i, j)]
            } else {
                xd[(i, j)] + xd[(j, i)]
            };
            for &(k, c) in &e.terms {
                grad[k] -= c * w;
            }
            dual_obj -= e.constant * w;
        }
        complementarity += b.evaluate(x).dot(xd);
    }
    for (e, &lam) in problem.inequalities.iter().zip(&solution.inequality_duals) {
        for &(k, c) in &e.terms {
            grad[k] -= c * lam;
        }
        dual_obj -= e.constant * lam;
        complementarity += e.evaluate(x) * lam;
    }

    let p = problem.equalities.len();
    let mut nu = DVector::<f64>::zeros(p);
    if p > 0 {
        let mut a_t = DMatrix::<f64>::zeros(n, p);
        for (r, e) in problem.equalities.iter().enumerate() {
            for &(k, c) in &e.terms {
                a_t[(k, r)] += c;
            }
        }
        let svd = a_t.clone().svd(true, true);
        if let Ok(sol) = svd.solve(&grad, 1e-12) {
            nu = sol;
        }
        grad -= &a_t * &nu;
        for (e, v) in problem.equalities.iter().zip(nu.iter()) {
            dual_obj -= e.constant * v;
        }
    }

    let obj = problem.objective.evaluate(x);
    Certificate {
        primal_residual,
        dual_residual: grad.norm() / dual_scale(problem),
        gap: complementarity.abs() / (1.0 + obj.abs() + dual_obj.abs()),
        dual_objective: dual_obj,
        equality_multipliers: nu.iter().copied().collect(),
    }
}
