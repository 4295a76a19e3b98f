//! Infeasible-start primal-dual interior-point method with Mehrotra
//! predictor-corrector steps.
//!
//! The affine problem is first reduced by eliminating equality constraints
//! (`x = x0 + N z`), then mapped onto the standard pair
//!
//! ```text
//! (P) min C.X  s.t. A_i.X = b_i, X >= 0
//! (D) max b^T y  s.t. C - sum y_i A_i = Z >= 0
//! ```
//!
//! with `y = z`, `C = F0`, `A_i = -F_i` and `b = -c`. Scalar inequalities form
//! one extra diagonal block. All linear algebra is dense.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::certificate::{dual_scale, equality_residual, primal_scale};
use super::direction::search_direction;
use super::problem::{AffineExpr, SdpProblem};
use super::psd::{max_step_to_boundary, min_eigenvalue};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub feasibility_tol: f64,
    pub gap_tol: f64,
    pub max_iterations: usize,
    /// Fraction of the step to the boundary of the cone, in (0, 1).
    pub step_fraction: f64,
    /// Registered search direction name.
    pub direction: String,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            gap_tol: 1e-7,
            max_iterations: 200,
            step_fraction: 0.95,
            direction: "hkm".into(),
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.feasibility_tol > 0.0) || !(self.gap_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "solver tolerances must be positive".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::InvalidParameter(
                "step_fraction must lie in (0, 1)".into(),
            ));
        }
        search_direction(&self.direction)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolverStatus,
    /// Decision vector in the problem's original variables.
    pub x: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    /// Worst cone violation of `x` (relative), or equality residual.
    pub primal_residual: f64,
    /// Relative stationarity residual of the multipliers.
    pub dual_residual: f64,
    /// Relative duality gap.
    pub gap: f64,
    pub iterations: usize,
    /// Multiplier matrix per PSD block.
    pub block_duals: Vec<DMatrix<f64>>,
    /// Multiplier per scalar inequality.
    pub inequality_duals: Vec<f64>,
}

/// Solves `problem`; infeasibility, unboundedness and numerical trouble are
/// reported through [`SolverStatus`]. Errors only for invalid settings.
pub fn solve(problem: &SdpProblem, settings: &SolverSettings) -> Result<SdpSolution> {
    settings.validate()?;
    let direction = search_direction(&settings.direction)?;

    let reduction = match Reduction::new(problem) {
        Some(r) => r,
        None => {
            return Ok(trivial(
                problem,
                SolverStatus::Infeasible,
                vec![0.0; problem.num_vars],
            ))
        }
    };
    let c_full: Vec<f64> = reduction.reduce(&problem.objective).1;
    let offset = reduction.reduce(&problem.objective).0;
    let std = Standard::build(problem, &reduction);

    // variables touching no constraint: fixed at zero, unbounded if they carry cost
    let mut active = vec![false; reduction.nz];
    for blk in &std.blocks {
        for (k, _) in &blk.vars {
            active[*k] = true;
        }
    }
    for k in 0..reduction.nz {
        if !active[k] && c_full[k].abs() > 0.0 {
            let x = reduction.expand(&vec![0.0; reduction.nz]);
            return Ok(trivial(problem, SolverStatus::Unbounded, x));
        }
    }
    let active_ids: Vec<usize> = (0..reduction.nz).filter(|&k| active[k]).collect();
    let mut slot = vec![usize::MAX; reduction.nz];
    for (s, &k) in active_ids.iter().enumerate() {
        slot[k] = s;
    }
    let blocks: Vec<StdBlock> = std
        .blocks
        .into_iter()
        .map(|mut b| {
            for v in &mut b.vars {
                v.0 = slot[v.0];
            }
            b
        })
        .collect();
    let m = active_ids.len();
    let b = DVector::from_iterator(m, active_ids.iter().map(|&k| -c_full[k]));

    let prim_scale = primal_scale(problem);
    let dual_scale = dual_scale(problem);
    let n_total: usize = blocks.iter().map(|b| b.dim).sum();

    let finish = |status: SolverStatus,
                  y: &DVector<f64>,
                  xs: &[DMatrix<f64>],
                  metrics: Metrics,
                  iterations: usize| {
        let mut z = vec![0.0; reduction.nz];
        for (s, &k) in active_ids.iter().enumerate() {
            z[k] = y[s];
        }
        let x = reduction.expand(&z);
        let n_psd = problem.blocks.len();
        let block_duals = xs[..n_psd].to_vec();
        let inequality_duals = if problem.inequalities.is_empty() {
            Vec::new()
        } else {
            xs[n_psd].diagonal().iter().copied().collect()
        };
        SdpSolution {
            status,
            objective: problem.objective.evaluate(&x),
            dual_objective: offset - metrics.pobj,
            primal_residual: metrics.primal_res.max(equality_residual(problem, &x)),
            x,
            dual_residual: metrics.dual_res,
            gap: metrics.gap,
            iterations,
            block_duals,
            inequality_duals,
        }
    };

    if n_total == 0 {
        // no cone constraints; every remaining variable is inactive
        let y = DVector::zeros(m);
        let metrics = Metrics {
            pobj: 0.0,
            primal_res: 0.0,
            dual_res: 0.0,
            gap: 0.0,
        };
        return Ok(finish(SolverStatus::Optimal, &y, &[], metrics, 0));
    }

    // starting point
    let mut xs: Vec<DMatrix<f64>> = Vec::with_capacity(blocks.len());
    let mut zs: Vec<DMatrix<f64>> = Vec::with_capacity(blocks.len());
    for blk in &blocks {
        let n = blk.dim as f64;
        let mut xi: f64 = 10f64.max(n.sqrt());
        let mut eta: f64 = 10f64.max(n.sqrt()).max(blk.c.norm());
        for (k, trip) in &blk.vars {
            let a_norm = trip.iter().map(|t| t.2 * t.2).sum::<f64>().sqrt();
            xi = xi.max(n * (1.0 + b[*k].abs()) / (1.0 + a_norm));
            eta = eta.max(a_norm);
        }
        xs.push(DMatrix::identity(blk.dim, blk.dim) * xi);
        zs.push(DMatrix::identity(blk.dim, blk.dim) * eta);
    }
    let mut y = DVector::zeros(m);

    let c_norm = blocks
        .iter()
        .map(|b| b.c.norm_squared())
        .sum::<f64>()
        .sqrt();
    let tau = settings.step_fraction;
    let mut stalled = 0;
    // best iterate so far by the worst tolerance ratio; returned when the
    // method stalls or breaks down
    let mut best: Option<(f64, usize, DVector<f64>, Vec<DMatrix<f64>>, Metrics)> = None;
    let measure = |y: &DVector<f64>, xs: &[DMatrix<f64>]| -> Metrics {
        let rp = &b - apply_a(&blocks, xs, m);
        let pobj: f64 = blocks.iter().zip(xs).map(|(blk, x)| blk.c.dot(x)).sum();
        let dobj = b.dot(y);
        let cone_violation = blocks
            .iter()
            .map(|blk| (-min_eigenvalue(&(&blk.c - blk.combine(y)))).max(0.0))
            .fold(0.0, f64::max);
        let psd_violation = xs
            .iter()
            .map(|x| (-min_eigenvalue(x)).max(0.0))
            .fold(0.0, f64::max);
        let ours = offset - dobj;
        let ours_dual = offset - pobj;
        Metrics {
            pobj,
            primal_res: cone_violation / prim_scale,
            dual_res: (rp.norm() + psd_violation) / dual_scale,
            gap: (pobj - dobj).abs() / (1.0 + ours.abs() + ours_dual.abs()),
        }
    };
    let merit_of = |mt: &Metrics| {
        (mt.primal_res / settings.feasibility_tol)
            .max(mt.dual_res / settings.feasibility_tol)
            .max(mt.gap / settings.gap_tol)
    };
    // keeps the polished multipliers only when they improve the iterate
    let polished =
        |y: &DVector<f64>, xs: Vec<DMatrix<f64>>, base: Metrics| match restore_multipliers(
            &blocks, &b, &xs, 0.9,
        ) {
            Some((px, _)) => {
                let pm = measure(y, &px);
                if merit_of(&pm) < merit_of(&base) {
                    (px, pm)
                } else {
                    (xs, base)
                }
            }
            None => (xs, base),
        };
    let mut polish_attempts = 0;
    // On breakdown, stall or iteration cap: polish the best and the current
    // iterate and report the better one.
    macro_rules! give_up {
        ($status:expr, $metrics:expr, $iter:expr) => {{
            log::debug!(
                "stopping at iteration {} (solver.rs:{}): {:?}",
                $iter,
                line!(),
                $status
            );
            let (cx, cm) = polished(&y, xs.clone(), $metrics);
            let (it, by, bx, bm) = match &best {
                Some((_, it, by, bx, bm)) => {
                    let (bx, bm) = polished(by, bx.clone(), *bm);
                    if merit_of(&bm) <= merit_of(&cm) {
                        (*it, by.clone(), bx, bm)
                    } else {
                        ($iter, y.clone(), cx, cm)
                    }
                }
                None => ($iter, y.clone(), cx, cm),
            };
            let status = if merit_of(&bm) <= 1.0 {
                SolverStatus::Optimal
            } else {
                $status
            };
            return Ok(finish(status, &by, &bx, bm, it));
        }};
    }
    for iter in 0..settings.max_iterations {
        let ax = apply_a(&blocks, &xs, m);
        let rp = &b - &ax;
        let aty: Vec<DMatrix<f64>> = blocks.iter().map(|blk| blk.combine(&y)).collect();
        let rd: Vec<DMatrix<f64>> = blocks
            .iter()
            .zip(&zs)
            .zip(&aty)
            .map(|((blk, z), a)| &blk.c - z - a)
            .collect();
        let pobj: f64 = blocks.iter().zip(&xs).map(|(blk, x)| blk.c.dot(x)).sum();
        let dobj = b.dot(&y);
        let xz: f64 = xs.iter().zip(&zs).map(|(x, z)| x.dot(z)).sum();
        let mu = xz / n_total as f64;

        let cone_violation = blocks
            .iter()
            .zip(&aty)
            .map(|(blk, a)| (-min_eigenvalue(&(&blk.c - a))).max(0.0))
            .fold(0.0, f64::max);
        let ours = offset - dobj;
        let ours_dual = offset - pobj;
        let metrics = Metrics {
            pobj,
            primal_res: cone_violation / prim_scale,
            dual_res: rp.norm() / dual_scale,
            gap: (pobj - dobj).abs() / (1.0 + ours.abs() + ours_dual.abs()),
        };
        if !(metrics.gap.is_finite()
            && metrics.dual_res.is_finite()
            && metrics.primal_res.is_finite())
        {
            give_up!(SolverStatus::NumericalFailure, metrics, iter);
        }
        log::trace!(
            "iter {iter}: obj {ours:.9e} pres {:.2e} dres {:.2e} gap {:.2e} mu {mu:.2e}",
            metrics.primal_res,
            metrics.dual_res,
            metrics.gap
        );
        if metrics.primal_res <= settings.feasibility_tol
            && metrics.dual_res <= settings.feasibility_tol
            && metrics.gap <= settings.gap_tol
        {
            return Ok(finish(SolverStatus::Optimal, &y, &xs, metrics, iter));
        }
        // near-degenerate problems reach the dual optimum while the
        // multipliers lag behind; try to repair them directly
        if metrics.primal_res <= settings.feasibility_tol
            && metrics.gap <= settings.gap_tol
            && polish_attempts < MAX_POLISH_ATTEMPTS
        {
            polish_attempts += 1;
            let (px, pm) = polished(&y, xs.clone(), metrics);
            if merit_of(&pm) <= 1.0 {
                return Ok(finish(SolverStatus::Optimal, &y, &px, pm, iter));
            }
        }

        // ray certificates
        if pobj < 0.0 && ax.norm() / (-pobj) < INFEASIBILITY_TOL * (1.0 + b.norm()) {
            return Ok(finish(SolverStatus::Infeasible, &y, &xs, metrics, iter));
        }
        if dobj > 0.0 {
            let cr: f64 = blocks
                .iter()
                .zip(&rd)
                .map(|(blk, r)| (&blk.c - r).norm_squared())
                .sum::<f64>()
                .sqrt();
            if cr / dobj < INFEASIBILITY_TOL * (1.0 + c_norm) {
                return Ok(finish(SolverStatus::Unbounded, &y, &xs, metrics, iter));
            }
        }
        let merit = merit_of(&metrics);
        match &best {
            Some((bm, ..)) if merit >= 0.9 * bm => {
                stalled += 1;
                if stalled >= STALL_ITERATIONS {
                    give_up!(SolverStatus::NumericalFailure, metrics, iter);
                }
            }
            _ => stalled = 0,
        }
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, iter, y.clone(), xs.clone(), metrics));
        }

        // scaling matrices
        let mut z_invs = Vec::with_capacity(blocks.len());
        let mut scal = Vec::with_capacity(blocks.len());
        for (x, z) in xs.iter().zip(&zs) {
            let Some(zi) = sym_inverse(z) else {
                give_up!(SolverStatus::NumericalFailure, metrics, iter);
            };
            let Some(pq) = direction.scaling(x, z, &zi) else {
                give_up!(SolverStatus::NumericalFailure, metrics, iter);
            };
            z_invs.push(zi);
            scal.push(pq);
        }
        let Some(schur) = factor_schur(&blocks, &scal, m) else {
            give_up!(SolverStatus::NumericalFailure, metrics, iter);
        };
        // A_i . (P Rd Q), shared by both solves
        let prq: Vec<DMatrix<f64>> = scal.iter().zip(&rd).map(|((p, q), r)| p * r * q).collect();
        let a_prq = apply_a(&blocks, &prq, m);

        let direction_for =
            |k: &[DMatrix<f64>]| -> (DVector<f64>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
                let rhs = &rp - apply_a(&blocks, k, m) + &a_prq;
                let mut dy = schur.solve(&rhs);
                let build = |dy: &DVector<f64>| {
                    let dz: Vec<DMatrix<f64>> = rd
                        .iter()
                        .zip(&blocks)
                        .map(|(r, blk)| r - blk.combine(dy))
                        .collect();
                    let dx: Vec<DMatrix<f64>> = k
                        .iter()
                        .zip(&dz)
                        .zip(&scal)
                        .map(|((kk, d), (p, q))| kk - symmetrize(&(p * d * q)))
                        .collect();
                    (dx, dz)
                };
                let (mut dx, mut dz) = build(&dy);
                // refine against the operator itself, not the assembled matrix
                let target = 1e-2 * rp.norm() + 1e-14 * (1.0 + b.norm());
                let mut err = &rp - apply_a(&blocks, &dx, m);
                for _ in 0..10 {
                    let before = err.norm();
                    if !(before > target) {
                        break;
                    }
                    let trial_dy = &dy + schur.solve(&err);
                    let (tx, tz) = build(&trial_dy);
                    let trial_err = &rp - apply_a(&blocks, &tx, m);
                    if !(trial_err.norm() < before) {
                        break;
                    }
                    (dy, dx, dz, err) = (trial_dy, tx, tz, trial_err);
                }
                (dy, dx, dz)
            };

        // predictor
        let k_aff: Vec<DMatrix<f64>> = xs.iter().map(|x| -x).collect();
        let (_, dx_a, dz_a) = direction_for(&k_aff);
        let ap = step_length(&xs, &dx_a).min(1.0);
        let ad = step_length(&zs, &dz_a).min(1.0);
        let mu_aff: f64 = xs
            .iter()
            .zip(&dx_a)
            .zip(zs.iter().zip(&dz_a))
            .map(|((x, dx), (z, dz))| (x + dx * ap).dot(&(z + dz * ad)))
            .sum::<f64>()
            / n_total as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let k_cor: Vec<DMatrix<f64>> = xs
            .iter()
            .zip(&z_invs)
            .zip(dx_a.iter().zip(&dz_a))
            .map(|((x, zi), (dx, dz))| zi * (sigma * mu) - x - symmetrize(&(dx * dz * zi)))
            .collect();
        let (mut dy, mut dx, mut dz) = direction_for(&k_cor);
        let mut ap = (tau * step_length(&xs, &dx)).min(1.0);
        let mut ad = (tau * step_length(&zs, &dz)).min(1.0);
        let stuck =
            |ap: f64, ad: f64| !(ap.is_finite() && ad.is_finite()) || (ap < 1e-12 && ad < 1e-12);
        if stuck(ap, ad) {
            // the second-order term can point straight out of the cone; fall
            // back to a pure centering step
            log::debug!("iteration {iter}: corrector blocked, centering instead");
            let k_cen: Vec<DMatrix<f64>> =
                xs.iter().zip(&z_invs).map(|(x, zi)| zi * mu - x).collect();
            (dy, dx, dz) = direction_for(&k_cen);
            ap = (tau * step_length(&xs, &dx)).min(1.0);
            ad = (tau * step_length(&zs, &dz)).min(1.0);
            if stuck(ap, ad) {
                give_up!(SolverStatus::NumericalFailure, metrics, iter);
            }
        }
        for (x, d) in xs.iter_mut().zip(&dx) {
            *x += d * ap;
            *x = symmetrize(x);
        }
        for (z, d) in zs.iter_mut().zip(&dz) {
            *z += d * ad;
            *z = symmetrize(z);
        }
        y += dy * ad;
        // late in the run the steps drift off A(X) = b; pull back
        if metrics.gap < RESTORE_BELOW_GAP
            && (&b - apply_a(&blocks, &xs, m)).norm() / dual_scale > settings.feasibility_tol
        {
            if let Some((px, _)) = restore_multipliers(&blocks, &b, &xs, 0.9) {
                xs = px;
            }
        }
    }
    give_up!(
        SolverStatus::MaxIterations,
        measure(&y, &xs),
        settings.max_iterations
    );
}

const MAX_POLISH_ATTEMPTS: usize = 3;
const RESTORE_BELOW_GAP: f64 = 1e-3;
const INFEASIBILITY_TOL: f64 = 1e-8;
/// Iterations without a 10% improvement of the best iterate before giving up.
const STALL_ITERATIONS: usize = 15;

#[derive(Clone, Copy, Debug)]
struct Metrics {
    pobj: f64,
    primal_res: f64,
    dual_res: f64,
    gap: f64,
}

fn trivial(problem: &SdpProblem, status: SolverStatus, x: Vec<f64>) -> SdpSolution {
    SdpSolution {
        status,
        objective: problem.objective.evaluate(&x),
        dual_objective: f64::NAN,
        x,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        gap: f64::INFINITY,
        iterations: 0,
        block_duals: problem
            .blocks
            .iter()
            .map(|b| DMatrix::zeros(b.dim(), b.dim()))
            .collect(),
        inequality_duals: vec![0.0; problem.inequalities.len()],
    }
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

fn sym_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = a.clone().cholesky()?.inverse();
    Some(symmetrize(&inv))
}

fn step_length(current: &[DMatrix<f64>], delta: &[DMatrix<f64>]) -> f64 {
    current
        .iter()
        .zip(delta)
        .map(|(c, d)| max_step_to_boundary(c, d))
        .fold(f64::INFINITY, f64::min)
}

/// `x = x0 + N z` after Gauss-Jordan elimination of the equality rows.
struct Reduction {
    x0: Vec<f64>,
    /// Sparse row `i` of `N`.
    map: Vec<Vec<(usize, f64)>>,
    nz: usize,
}

impl Reduction {
    /// `None` when the equalities are inconsistent.
    fn new(problem: &SdpProblem) -> Option<Self> {
        let n = problem.num_vars;
        let p = problem.equalities.len();
        let mut a = DMatrix::<f64>::zeros(p, n);
        let mut rhs = DVector::<f64>::zeros(p);
        for (r, e) in problem.equalities.iter().enumerate() {
            for &(i, c) in &e.terms {
                a[(r, i)] += c;
            }
            rhs[r] = -e.constant;
        }
        let mut pivot_of_row: Vec<Option<usize>> = vec![None; p];
        let mut is_pivot = vec![false; n];
        for r in 0..p {
            let row_scale = a.row(r).amax().max(rhs[r].abs()).max(1.0);
            let (col, val) = (0..n)
                .filter(|&c| !is_pivot[c])
                .map(|c| (c, a[(r, c)]))
                .fold((usize::MAX, 0.0f64), |best, cur| {
                    if cur.1.abs() > best.1.abs() {
                        cur
                    } else {
                        best
                    }
                });
            if col == usize::MAX || val.abs() <= 1e-12 * row_scale {
                if rhs[r].abs() > 1e-9 * row_scale {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / val;
            for c in 0..n {
                a[(r, c)] *= inv;
            }
            rhs[r] *= inv;
            a[(r, col)] = 1.0;
            for o in 0..p {
                if o != r {
                    let f = a[(o, col)];
                    if f != 0.0 {
                        for c in 0..n {
                            let v = a[(r, c)];
                            a[(o, c)] -= f * v;
                        }
                        rhs[o] -= f * rhs[r];
                        a[(o, col)] = 0.0;
                    }
                }
            }
            pivot_of_row[r] = Some(col);
            is_pivot[col] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let mut zpos = vec![usize::MAX; n];
        for (k, &c) in free.iter().enumerate() {
            zpos[c] = k;
        }
        let mut x0 = vec![0.0; n];
        let mut map: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &c in &free {
            map[c] = vec![(zpos[c], 1.0)];
        }
        for r in 0..p {
            if let Some(col) = pivot_of_row[r] {
                x0[col] = rhs[r];
                map[col] = free
                    .iter()
                    .filter(|&&f| a[(r, f)] != 0.0)
                    .map(|&f| (zpos[f], -a[(r, f)]))
                    .collect();
            }
        }
        Some(Self {
            x0,
            map,
            nz: free.len(),
        })
    }

    /// `(constant, dense coefficient vector over z)`.
    fn reduce(&self, e: &AffineExpr) -> (f64, Vec<f64>) {
        let mut constant = e.constant;
        let mut coeffs = vec![0.0; self.nz];
        for &(i, c) in &e.terms {
            constant += c * self.x0[i];
            for &(k, v) in &self.map[i] {
                coeffs[k] += c * v;
            }
        }
        (constant, coeffs)
    }

    fn reduce_sparse(&self, e: &AffineExpr) -> (f64, BTreeMap<usize, f64>) {
        let mut constant = e.constant;
        let mut coeffs = BTreeMap::new();
        for &(i, c) in &e.terms {
            constant += c * self.x0[i];
            for &(k, v) in &self.map[i] {
                *coeffs.entry(k).or_insert(0.0) += c * v;
            }
        }
        coeffs.retain(|_, v| *v != 0.0);
        (constant, coeffs)
    }

    fn expand(&self, z: &[f64]) -> Vec<f64> {
        self.x0
            .iter()
            .zip(&self.map)
            .map(|(x0, row)| x0 + row.iter().map(|&(k, v)| v * z[k]).sum::<f64>())
            .collect()
    }
}

/// One block of the standard form: `C` and the nonzeros of each `A_i`.
struct StdBlock {
    dim: usize,
    c: DMatrix<f64>,
    /// `(variable, [(row, col, value)])` with both triangles listed.
    vars: Vec<(usize, Vec<(usize, usize, f64)>)>,
}

impl StdBlock {
    /// `sum_i y_i A_i`.
    fn combine(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for (k, trip) in &self.vars {
            let yk = y[*k];
            if yk != 0.0 {
                for &(r, c, v) in trip {
                    out[(r, c)] += yk * v;
                }
            }
        }
        out
    }
}

struct Standard {
    blocks: Vec<StdBlock>,
}

impl Standard {
    fn build(problem: &SdpProblem, red: &Reduction) -> Self {
        let mut blocks = Vec::new();
        for pb in &problem.blocks {
            let dim = pb.dim();
            let mut c = DMatrix::zeros(dim, dim);
            let mut per_var: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
            for (i, j, e) in pb.upper_entries() {
                let (k0, coeffs) = red.reduce_sparse(e);
                c[(i, j)] = k0;
                c[(j, i)] = k0;
                for (k, v) in coeffs {
                    let list = per_var.entry(k).or_default();
                    list.push((i, j, -v));
                    if i != j {
                        list.push((j, i, -v));
                    }
                }
            }
            blocks.push(StdBlock {
                dim,
                c,
                vars: per_var.into_iter().collect(),
            });
        }
        if !problem.inequalities.is_empty() {
            let dim = problem.inequalities.len();
            let mut c = DMatrix::zeros(dim, dim);
            let mut per_var: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
            for (l, e) in problem.inequalities.iter().enumerate() {
                let (k0, coeffs) = red.reduce_sparse(e);
                c[(l, l)] = k0;
                for (k, v) in coeffs {
                    per_var.entry(k).or_default().push((l, l, -v));
                }
            }
            blocks.push(StdBlock {
                dim,
                c,
                vars: per_var.into_iter().collect(),
            });
        }
        Self { blocks }
    }
}

/// Moves the multipliers onto `A(X) = b` by the correction of least norm in
/// the metric scaled by `X` itself, `dX = R D R` with `R = X^(1/2)`.
///
/// Returns the corrected blocks and whether the full correction fit inside
/// the cone; otherwise the step is cut to `fraction` of the distance to the
/// boundary. `None` when the correction cannot be computed.
fn restore_multipliers(
    blocks: &[StdBlock],
    b: &DVector<f64>,
    xs: &[DMatrix<f64>],
    fraction: f64,
) -> Option<(Vec<DMatrix<f64>>, bool)> {
    let m = b.len();
    let offsets: Vec<usize> = blocks
        .iter()
        .scan(0, |acc, blk| {
            let o = *acc;
            *acc += blk.dim * (blk.dim + 1) / 2;
            Some(o)
        })
        .collect();
    let unknowns: usize = blocks.iter().map(|blk| blk.dim * (blk.dim + 1) / 2).sum();
    let roots: Vec<DMatrix<f64>> = xs.iter().map(psd_sqrt).collect();
    // row i of G holds the upper triangle of R A_i R, off-diagonals doubled
    let mut gt = DMatrix::<f64>::zeros(unknowns, m);
    for ((blk, root), &off) in blocks.iter().zip(&roots).zip(&offsets) {
        let k = blk.dim;
        for (var, trip) in &blk.vars {
            let mut ra = DMatrix::<f64>::zeros(k, k);
            for &(r, c, v) in trip {
                for i in 0..k {
                    let ri = v * root[(i, r)];
                    for j in i..k {
                        ra[(i, j)] += ri * root[(c, j)];
                    }
                }
            }
            let mut col = off;
            for i in 0..k {
                for j in i..k {
                    gt[(col, *var)] = if i == j { ra[(i, i)] } else { 2.0 * ra[(i, j)] };
                    col += 1;
                }
            }
        }
    }
    let rhs = b - apply_a(blocks, xs, m);
    // least-norm solution through the QR factors of G^T
    let qr = gt.qr();
    let r = qr.r();
    if (0..m).any(|i| !(r[(i, i)].abs() > 1e-13 * r[(0, 0)].abs())) {
        return None;
    }
    let w = r.transpose().solve_lower_triangular(&rhs)?;
    let delta = qr.q() * w;

    let mut steps = Vec::with_capacity(blocks.len());
    let mut t_max = f64::INFINITY;
    for (blk, &off) in blocks.iter().zip(&offsets) {
        let k = blk.dim;
        let mut d = DMatrix::zeros(k, k);
        let mut col = off;
        for i in 0..k {
            for j in i..k {
                d[(i, j)] = delta[col];
                d[(j, i)] = delta[col];
                col += 1;
            }
        }
        let lam = min_eigenvalue(&d);
        if lam < 0.0 {
            t_max = t_max.min(-1.0 / lam);
        }
        steps.push(d);
    }
    let full = t_max > 1.0;
    let t = if full { 1.0 } else { fraction * t_max };
    let out = xs
        .iter()
        .zip(&roots)
        .zip(&steps)
        .map(|((x, root), d)| symmetrize(&(x + root * d * root * t)))
        .collect();
    Some((out, full))
}

fn psd_sqrt(s: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = s.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// `(A_i . X)_i` summed over blocks.
fn apply_a(blocks: &[StdBlock], xs: &[DMatrix<f64>], m: usize) -> DVector<f64> {
    let mut out = DVector::zeros(m);
    for (blk, x) in blocks.iter().zip(xs) {
        for (k, trip) in &blk.vars {
            out[*k] += trip.iter().map(|&(r, c, v)| v * x[(r, c)]).sum::<f64>();
        }
    }
    out
}

/// Factored Schur complement with diagonal equilibration `D M D`.
struct Schur {
    matrix: DMatrix<f64>,
    d: DVector<f64>,
    factor: SchurFactor,
}

enum SchurFactor {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Schur {
    fn solve_once(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let scaled = rhs.component_mul(&self.d);
        let sol = match &self.factor {
            SchurFactor::Chol(c) => c.solve(&scaled),
            SchurFactor::Lu(lu) => lu
                .solve(&scaled)
                .unwrap_or_else(|| DVector::from_element(rhs.len(), f64::NAN)),
        };
        sol.component_mul(&self.d)
    }

    /// Solve with a few rounds of iterative refinement against the
    /// unregularized matrix.
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.solve_once(rhs);
        let norm = rhs.norm();
        for _ in 0..3 {
            let res = rhs - &self.matrix * &x;
            if !(res.norm() > 1e-15 * norm) {
                break;
            }
            x += self.solve_once(&res);
        }
        x
    }
}

/// Builds `M_ij = tr(A_i P A_j Q)` and factors it.
fn factor_schur(
    blocks: &[StdBlock],
    scal: &[(DMatrix<f64>, DMatrix<f64>)],
    m: usize,
) -> Option<Schur> {
    let mut mat = DMatrix::<f64>::zeros(m, m);
    for (blk, (p, q)) in blocks.iter().zip(scal) {
        let n = blk.dim;
        for (i, trip_i) in &blk.vars {
            // H = Q A_i P
            let h = if trip_i.len() > 2 * n {
                let mut a = DMatrix::zeros(n, n);
                for &(r, c, v) in trip_i {
                    a[(r, c)] += v;
                }
                q * a * p
            } else {
                let mut h = DMatrix::zeros(n, n);
                for &(a, b, v) in trip_i {
                    // H[d, c] += v Q[d, a] P[b, c]
                    for c in 0..n {
                        let pbc = v * p[(b, c)];
                        if pbc != 0.0 {
                            for d in 0..n {
                                h[(d, c)] += q[(d, a)] * pbc;
                            }
                        }
                    }
                }
                h
            };
            for (j, trip_j) in &blk.vars {
                let s: f64 = trip_j.iter().map(|&(c, d, w)| w * h[(d, c)]).sum();
                mat[(*i, *j)] += s;
            }
        }
    }
    let mat = symmetrize(&mat);
    let d = mat
        .diagonal()
        .map(|v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 });
    let scaled = DMatrix::from_fn(m, m, |i, j| mat[(i, j)] * d[i] * d[j]);
    let factor = if let Some(ch) = scaled.clone().cholesky() {
        SchurFactor::Chol(ch)
    } else {
        let mut reg = 1e-14;
        let mut found = None;
        for _ in 0..6 {
            let shifted = &scaled + DMatrix::identity(m, m) * reg;
            if let Some(ch) = shifted.cholesky() {
                found = Some(SchurFactor::Chol(ch));
                break;
            }
            reg *= 100.0;
        }
        match found {
            Some(f) => f,
            None => {
                let lu = scaled.lu();
                if !lu.is_invertible() {
                    return None;
                }
                SchurFactor::Lu(lu)
            }
        }
    };
    Some(Schur {
        matrix: mat,
        d,
        factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::PsdBlock;

    fn two_by_two() -> SdpProblem {
        // min x  s.t. [[x, 1], [1, x]] >= 0
        let mut p = SdpProblem::new(1);
        p.objective = AffineExpr::var(0);
        let mut b = PsdBlock::new("m", 2);
        b.set(0, 0, AffineExpr::var(0));
        b.set(1, 1, AffineExpr::var(0));
        b.set(0, 1, AffineExpr::constant(1.0));
        p.blocks.push(b);
        p
    }

    #[test]
    fn minimal_eigenvalue_problem() {
        for dir in ["hkm", "nt"] {
            let settings = SolverSettings {
                direction: dir.into(),
                ..SolverSettings::default()
            };
            let sol = solve(&two_by_two(), &settings).unwrap();
            assert_eq!(sol.status, SolverStatus::Optimal, "{dir}");
            assert!((sol.x[0] - 1.0).abs() < 1e-6, "{dir}: {}", sol.x[0]);
        }
    }

    #[test]
    fn schur_complement_with_equality() {
        // min y2  s.t. [[1, y1], [y1, y2]] >= 0, y1 = 0.3
        let mut p = SdpProblem::new(2);
        p.objective = AffineExpr::var(1);
        let mut b = PsdBlock::new("m1", 2);
        b.set(0, 0, AffineExpr::constant(1.0));
        b.set(0, 1, AffineExpr::var(0));
        b.set(1, 1, AffineExpr::var(1));
        p.blocks.push(b);
        p.equalities.push(AffineExpr::from_terms(-0.3, [(0, 1.0)]));
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.x[0] - 0.3).abs() < 1e-12);
        assert!((sol.x[1] - 0.09).abs() < 1e-6, "{}", sol.x[1]);
    }

    #[test]
    fn infeasible_lmi_detected() {
        // x >= 1 and x <= -1
        let mut p = SdpProblem::new(1);
        p.objective = AffineExpr::var(0);
        p.inequalities
            .push(AffineExpr::from_terms(-1.0, [(0, 1.0)]));
        p.inequalities
            .push(AffineExpr::from_terms(-1.0, [(0, -1.0)]));
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        // min -x  s.t. x >= 0
        let mut p = SdpProblem::new(1);
        p.objective = AffineExpr::from_terms(0.0, [(0, -1.0)]);
        p.inequalities.push(AffineExpr::var(0));
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Unbounded);
    }

    #[test]
    fn inconsistent_equalities() {
        let mut p = SdpProblem::new(1);
        p.equalities.push(AffineExpr::from_terms(-1.0, [(0, 1.0)]));
        p.equalities.push(AffineExpr::from_terms(-2.0, [(0, 1.0)]));
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Infeasible);
    }

    #[test]
    fn free_variable_with_cost_is_unbounded() {
        let mut p = two_by_two();
        p.num_vars = 2;
        p.objective = AffineExpr::from_terms(0.0, [(0, 1.0), (1, 1.0)]);
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolverStatus::Unbounded);
    }

    #[test]
    fn bad_settings_rejected() {
        let s = SolverSettings {
            direction: "xyz".into(),
            ..SolverSettings::default()
        };
        assert!(solve(&two_by_two(), &s).is_err());
        let s = SolverSettings {
            step_fraction: 1.0,
            ..SolverSettings::default()
        };
        assert!(s.validate().is_err());
    }
}
