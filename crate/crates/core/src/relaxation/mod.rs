//! Assembly of the moment SDP for one control step.
//!
//! Two moment sequences are decision variables: `y_u` over the stacked
//! inputs and `y` over the first-step pair `(u_k, w_k)`. The measure behind
//! `y` must be dominated by the product of the first-step input marginal of
//! `y_u` with the disturbance law, carry at least the required probability
//! mass and live on the constraint set. The objective is the expected cost
//! plus a trace term pushing `M_r(y_u)` towards rank one.

mod scaling;

pub use scaling::{scale_problem, AffineScaling};

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    constraint_polynomial, expected_cost, required_probability, ProblemSpec, SignMode,
};
use crate::error::{Error, Result};
use crate::moments::{localizing_order, localizing_pattern, moment_pattern, MomentSequence};
use crate::poly::{basis_len, index_of, monomial_basis, Monomial, Polynomial};
use crate::sdp::{AffineExpr, PsdBlock, SdpProblem, Segment};

pub const INPUT_SEGMENT: &str = "y_u";
pub const JOINT_SEGMENT: &str = "y";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxationConfig {
    pub order: u32,
    /// Weight of the trace term.
    pub omega_r: f64,
    pub sign: SignMode,
    /// Rescale input and disturbance boxes to `[-1, 1]`.
    pub scale: bool,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self {
            order: 5,
            omega_r: 1.0,
            sign: SignMode::Contraction,
            scale: true,
        }
    }
}

impl RelaxationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_r >= 0.0 && self.omega_r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega_r must be a nonnegative number, got {}",
                self.omega_r
            )));
        }
        Ok(())
    }
}

/// A built relaxation together with what is needed to read its solution.
#[derive(Clone, Debug)]
pub struct Relaxation {
    pub problem: SdpProblem,
    pub scaling: AffineScaling,
    pub order: u32,
    pub required_probability: f64,
    /// Expected cost over the scaled stacked inputs.
    pub expected_cost: Polynomial,
    /// Constraint polynomial over scaled `(u_k, w_k)`.
    pub constraint: Polynomial,
    pub num_inputs: usize,
    pub joint_vars: usize,
}

impl Relaxation {
    /// `y_u` read from a solution vector (in scaled coordinates).
    pub fn input_moments(&self, x: &[f64]) -> MomentSequence {
        self.segment_moments(INPUT_SEGMENT, x)
    }

    /// `y` read from a solution vector (in scaled coordinates).
    pub fn joint_moments(&self, x: &[f64]) -> MomentSequence {
        self.segment_moments(JOINT_SEGMENT, x)
    }

    fn segment_moments(&self, name: &str, x: &[f64]) -> MomentSequence {
        let s = self.problem.segment(name).expect("relaxation segments");
        MomentSequence::new(s.num_vars, s.max_degree, x[s.range()].to_vec())
            .expect("segment length")
    }

    /// Decision vector holding the given sequences.
    pub fn pack(&self, y_u: &MomentSequence, y: &MomentSequence) -> Vec<f64> {
        let mut out = y_u.values().to_vec();
        out.extend_from_slice(y.values());
        out
    }
}

/// Smallest order for which every block and the objective are defined.
pub fn minimum_order(
    expected_cost: &Polynomial,
    constraint: &Polynomial,
    input_polys: &[Polynomial],
) -> u32 {
    let mut r = 1u32;
    r = r.max(expected_cost.degree().div_ceil(2));
    r = r.max(constraint.degree().div_ceil(2));
    for p in input_polys {
        r = r.max(p.degree().div_ceil(2));
    }
    r
}

pub fn build_relaxation(
    spec: &ProblemSpec,
    x_k: &[f64],
    cfg: &RelaxationConfig,
) -> Result<Relaxation> {
    spec.validate()?;
    cfg.validate()?;
    let (scaled, scaling) = scale_problem(spec, cfg)?;
    let n_u = spec.model.n_u;
    let n_w = spec.model.n_w;
    let n_in = scaled.num_inputs();
    let n_joint = n_u + n_w;

    let p_req = required_probability(spec, x_k)?;
    let p_e = expected_cost(&scaled, x_k)?;
    let p_k = constraint_polynomial(&scaled, x_k, cfg.sign)?;
    let input_polys = scaled.input_set.nonnegative_form();
    let r_min = minimum_order(&p_e, &p_k, &input_polys);
    let r = cfg.order;
    if r < r_min {
        return Err(Error::OrderTooSmall {
            given: r,
            required: r_min,
        });
    }
    let d = 2 * r;

    let len_u = basis_len(n_in, d);
    let len_y = basis_len(n_joint, d);
    let mut problem = SdpProblem::new(len_u + len_y);
    problem.segments = vec![
        Segment {
            name: INPUT_SEGMENT.into(),
            offset: 0,
            num_vars: n_in,
            max_degree: d,
        },
        Segment {
            name: JOINT_SEGMENT.into(),
            offset: len_u,
            num_vars: n_joint,
            max_degree: d,
        },
    ];
    let yu = |k: usize| AffineExpr::var(k);
    let yj = |k: usize| AffineExpr::var(len_u + k);

    // measure on (u_k, w_k)
    problem.blocks.push(PsdBlock::from_pattern(
        "moment_y",
        &moment_pattern(n_joint, r),
        yj,
    ));
    let mut joint_localizers: Vec<(String, Polynomial)> = vec![("constraint".into(), p_k.clone())];
    for j in 0..n_u {
        let [lo, hi] = scaled.input_set.bounds[j];
        joint_localizers.push((
            format!("box_u{}", j + 1),
            box_polynomial(n_joint, j, lo, hi),
        ));
    }
    for j in 0..n_w {
        let [lo, hi] = scaled.disturbance.bounds[j];
        joint_localizers.push((
            format!("box_w{}", j + 1),
            box_polynomial(n_joint, n_u + j, lo, hi),
        ));
    }
    for (i, g) in input_polys.iter().enumerate() {
        if let Some(first) = restrict_to_first_step(g, n_u, n_joint) {
            joint_localizers.push((format!("input{}", i + 1), first));
        }
    }
    for (name, g) in &joint_localizers {
        let order = localizing_order(r, g).expect("order checked against minimum");
        problem.blocks.push(PsdBlock::from_pattern(
            format!("localizing_y_{name}"),
            &localizing_pattern(g, order),
            yj,
        ));
    }

    // measure on the stacked inputs
    problem.blocks.push(PsdBlock::from_pattern(
        "moment_y_u",
        &moment_pattern(n_in, r),
        yu,
    ));
    let mut input_localizers: Vec<(String, Polynomial)> = input_polys
        .iter()
        .enumerate()
        .map(|(i, g)| (format!("input{}", i + 1), g.clone()))
        .collect();
    for j in 0..n_in {
        let [lo, hi] = scaled.input_set.bounds[j];
        input_localizers.push((format!("box_u{}", j + 1), box_polynomial(n_in, j, lo, hi)));
    }
    for (name, g) in &input_localizers {
        let order = localizing_order(r, g).expect("order checked against minimum");
        problem.blocks.push(PsdBlock::from_pattern(
            format!("localizing_y_u_{name}"),
            &localizing_pattern(g, order),
            yu,
        ));
    }

    // domination: first-step marginal of y_u times the disturbance law, minus y
    let w_moments = scaled.disturbance.joint_moments(d)?;
    let joint_basis = monomial_basis(n_joint, d);
    let dominated: Vec<AffineExpr> = joint_basis
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let (a, b) = m.split_at(n_u);
            let mut stacked = a.exponents().to_vec();
            stacked.resize(n_in, 0);
            let weight = w_moments.values()[index_of(b.exponents())];
            AffineExpr::from_terms(0.0, [(index_of(&stacked), weight), (len_u + k, -1.0)])
        })
        .collect();
    problem.blocks.push(PsdBlock::from_pattern(
        "domination",
        &moment_pattern(n_joint, r),
        |k| dominated[k].clone(),
    ));

    problem
        .inequalities
        .push(AffineExpr::from_terms(-p_req, [(len_u, 1.0)]));
    problem
        .equalities
        .push(AffineExpr::from_terms(-1.0, [(0, 1.0)]));

    let mut objective = AffineExpr::default();
    for (m, c) in p_e.terms() {
        objective.add_scaled(&yu(index_of(m.exponents())), c);
    }
    if cfg.omega_r > 0.0 {
        for m in monomial_basis(n_in, r) {
            objective.add_scaled(&yu(index_of(m.scaled(2).exponents())), cfg.omega_r);
        }
    }
    problem.objective = objective;

    Ok(Relaxation {
        problem,
        scaling,
        order: r,
        required_probability: p_req,
        expected_cost: p_e,
        constraint: p_k,
        num_inputs: n_in,
        joint_vars: n_joint,
    })
}

/// `(hi - x_i)(x_i - lo)`.
fn box_polynomial(num_vars: usize, i: usize, lo: f64, hi: f64) -> Polynomial {
    let x = Polynomial::var(num_vars, i);
    let upper = (-&x).add_constant(hi);
    let lower = x.add_constant(-lo);
    &upper * &lower
}

/// Re-expresses an input-set polynomial in the `(u_k, w_k)` space when it
/// only involves the first-step inputs.
fn restrict_to_first_step(g: &Polynomial, n_u: usize, n_joint: usize) -> Option<Polynomial> {
    if (n_u..g.num_vars()).any(|j| g.degree_in(j) > 0) {
        return None;
    }
    let mut out = Polynomial::zero(n_joint);
    for (m, c) in g.terms() {
        let mut exps = vec![0u32; n_joint];
        exps[..n_u].copy_from_slice(&m.exponents()[..n_u]);
        out.add_term(Monomial::new(exps), c);
    }
    Some(out)
}

#[cfg(test)]
mod tests;
