//! Problem data, symbolic unrolling of the dynamics over the horizon, the
//! expected-cost polynomial and the contraction-constraint polynomial.
//!
//! Horizon polynomials live in the variable space
//! `(u_k, .., u_{k+N-1}, w_k, .., w_{k+N-1})`, each input block `n_u` wide
//! and each disturbance block `n_w` wide.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::DisturbanceSpec;
use crate::poly::{Monomial, Polynomial};

/// `x_{k+1} = f(x_k, u_k, w_k)` with `f` over `(x, u, w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemModel {
    pub n_x: usize,
    pub n_u: usize,
    pub n_w: usize,
    pub f: Vec<Polynomial>,
}

impl SystemModel {
    pub fn new(n_x: usize, n_u: usize, n_w: usize, f: Vec<Polynomial>) -> Result<Self> {
        let model = Self { n_x, n_u, n_w, f };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.f.len() != self.n_x {
            return Err(Error::DimensionMismatch {
                expected: self.n_x,
                got: self.f.len(),
            });
        }
        for p in &self.f {
            if p.num_vars() != self.num_vars() {
                return Err(Error::DimensionMismatch {
                    expected: self.num_vars(),
                    got: p.num_vars(),
                });
            }
        }
        Ok(())
    }

    /// Variables of `f`: `n_x + n_u + n_w`.
    pub fn num_vars(&self) -> usize {
        self.n_x + self.n_u + self.n_w
    }

    /// One numeric step.
    pub fn step(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n_x, x.len())?;
        check_len(self.n_u, u.len())?;
        check_len(self.n_w, w.len())?;
        let point: Vec<f64> = x.iter().chain(u).chain(w).copied().collect();
        Ok(self.f.iter().map(|p| p.eval_unchecked(&point)).collect())
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    /// `p(x) >= 0`
    NonNegative,
    /// `p(x) <= 0`
    NonPositive,
}

/// `{x in box : each constraint holds}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SemialgebraicSet {
    pub constraints: Vec<(Polynomial, Sense)>,
    /// `[lo, hi]` per variable.
    pub bounds: Vec<[f64; 2]>,
}

impl SemialgebraicSet {
    pub fn num_vars(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<()> {
        for &[lo, hi] in &self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidInterval { lo, hi });
            }
        }
        for (p, _) in &self.constraints {
            check_len(self.num_vars(), p.num_vars())?;
        }
        Ok(())
    }

    /// Constraint polynomials flipped so the set reads `{g_i >= 0}`.
    pub fn nonnegative_form(&self) -> Vec<Polynomial> {
        self.constraints
            .iter()
            .map(|(p, s)| match s {
                Sense::NonNegative => p.clone(),
                Sense::NonPositive => -p,
            })
            .collect()
    }

    /// Membership in the bounding box alone.
    pub fn contains_box(&self, point: &[f64]) -> bool {
        point.len() == self.num_vars()
            && point
                .iter()
                .zip(&self.bounds)
                .all(|(v, b)| *v >= b[0] && *v <= b[1])
    }

    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        point.len() == self.num_vars()
            && point
                .iter()
                .zip(&self.bounds)
                .all(|(v, b)| *v >= b[0] - tol && *v <= b[1] + tol)
            && self
                .nonnegative_form()
                .iter()
                .all(|g| g.eval_unchecked(point) >= -tol)
    }
}

/// Which event the chance constraint protects.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMode {
    /// `P_D(x_{k+1}) <= alpha * P_D(x_k)`.
    #[default]
    Contraction,
    /// The reversed inequality, `P_D(x_{k+1}) >= alpha * P_D(x_k)`.
    Reversed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub model: SystemModel,
    /// Target set `{P_D <= 0}` given by one `NonPositive` constraint; the
    /// bounds form the state box.
    pub desired_set: SemialgebraicSet,
    /// Admissible stacked inputs, over `horizon * n_u` variables.
    pub input_set: SemialgebraicSet,
    pub disturbance: DisturbanceSpec,
    /// Cost over `(x_{k+1}, .., x_{k+N}, u_k, .., u_{k+N-1})`.
    pub cost: Polynomial,
    pub alpha: f64,
    pub beta: f64,
    pub horizon: usize,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let m = &self.model;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        self.desired_set.validate()?;
        check_len(m.n_x, self.desired_set.num_vars())?;
        if self.desired_set.constraints.len() != 1
            || self.desired_set.constraints[0].1 != Sense::NonPositive
        {
            return Err(Error::InvalidParameter(
                "the desired set must be given by exactly one `<= 0` polynomial".into(),
            ));
        }
        self.input_set.validate()?;
        check_len(self.horizon * m.n_u, self.input_set.num_vars())?;
        self.disturbance.validate()?;
        check_len(m.n_w, self.disturbance.dim())?;
        check_len(self.horizon * (m.n_x + m.n_u), self.cost.num_vars())?;
        Ok(())
    }

    pub fn desired_polynomial(&self) -> &Polynomial {
        &self.desired_set.constraints[0].0
    }

    /// `P_D(x)`.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        self.desired_polynomial().evaluate(x)
    }

    /// Number of stacked decision inputs, `horizon * n_u`.
    pub fn num_inputs(&self) -> usize {
        self.horizon * self.model.n_u
    }

    /// Variables of the horizon space.
    pub fn horizon_vars(&self) -> usize {
        self.horizon * (self.model.n_u + self.model.n_w)
    }

    /// Sum over the horizon of a stage cost over `(x, u)`, where stage `i`
    /// pairs `x_{k+i}` with `u_{k+i-1}`.
    pub fn summed_stage_cost(
        stage: &Polynomial,
        n_x: usize,
        n_u: usize,
        horizon: usize,
    ) -> Result<Polynomial> {
        check_len(n_x + n_u, stage.num_vars())?;
        let total = horizon * (n_x + n_u);
        let mut out = Polynomial::zero(total);
        for i in 0..horizon {
            let positions: Vec<usize> = (0..n_x)
                .map(|j| i * n_x + j)
                .chain((0..n_u).map(|j| horizon * n_x + i * n_u + j))
                .collect();
            out = &out + &stage.embed(total, &positions);
        }
        Ok(out)
    }
}

/// State polynomials `x_{k+1}, .., x_{k+horizon}` over the horizon space.
pub fn unroll(model: &SystemModel, x_k: &[f64], horizon: usize) -> Result<Vec<Vec<Polynomial>>> {
    check_len(model.n_x, x_k.len())?;
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let h = horizon * (model.n_u + model.n_w);
    let mut state: Vec<Polynomial> = x_k.iter().map(|&v| Polynomial::constant(h, v)).collect();
    let mut out = Vec::with_capacity(horizon);
    for i in 0..horizon {
        let mut map = state.clone();
        map.extend((0..model.n_u).map(|j| Polynomial::var(h, i * model.n_u + j)));
        map.extend(
            (0..model.n_w).map(|j| Polynomial::var(h, horizon * model.n_u + i * model.n_w + j)),
        );
        state = model
            .f
            .iter()
            .map(|p| p.substitute(&map))
            .collect::<Result<_>>()?;
        out.push(state.clone());
    }
    Ok(out)
}

/// Integrates the disturbance variables (the trailing `horizon * n_w`) out of
/// a horizon polynomial. `moments[j]` holds the raw moments of disturbance
/// coordinate `j`, shared by all time steps.
pub fn integrate_disturbances(
    p: &Polynomial,
    num_inputs: usize,
    moments: &[Vec<f64>],
) -> Result<Polynomial> {
    let n_w = moments.len();
    let mut out = Polynomial::zero(num_inputs);
    for (m, c) in p.terms() {
        let (inputs, dist) = m.split_at(num_inputs);
        let mut coeff = c;
        for (idx, &e) in dist.exponents().iter().enumerate() {
            if e == 0 {
                continue;
            }
            let table = &moments[idx % n_w.max(1)];
            let Some(v) = table.get(e as usize) else {
                return Err(Error::MissingMoments {
                    available: table.len().saturating_sub(1) as u32,
                    required: e,
                });
            };
            coeff *= v;
        }
        out.add_term(inputs, coeff);
    }
    Ok(out)
}

/// Cost over the horizon expressed in the horizon space (before expectation).
pub fn horizon_cost(spec: &ProblemSpec, x_k: &[f64]) -> Result<Polynomial> {
    let states = unroll(&spec.model, x_k, spec.horizon)?;
    let h = spec.horizon_vars();
    let mut map: Vec<Polynomial> = states.into_iter().flatten().collect();
    map.extend((0..spec.num_inputs()).map(|j| Polynomial::var(h, j)));
    spec.cost.substitute(&map)
}

/// `E[cost]` as a polynomial in the stacked inputs.
pub fn expected_cost(spec: &ProblemSpec, x_k: &[f64]) -> Result<Polynomial> {
    let p = horizon_cost(spec, x_k)?;
    let moments = disturbance_moment_tables(&spec.disturbance, p.degree())?;
    integrate_disturbances(&p, spec.num_inputs(), &moments)
}

/// Raw moments per disturbance coordinate up to `degree`.
pub fn disturbance_moment_tables(d: &DisturbanceSpec, degree: u32) -> Result<Vec<Vec<f64>>> {
    let model = d.model()?;
    d.bounds
        .iter()
        .map(|&[lo, hi]| model.moments(lo, hi, degree))
        .collect()
}

/// Constraint polynomial over `(u_k, w_k)` whose nonnegativity is the
/// protected event.
pub fn constraint_polynomial(
    spec: &ProblemSpec,
    x_k: &[f64],
    sign: SignMode,
) -> Result<Polynomial> {
    let m = &spec.model;
    check_len(m.n_x, x_k.len())?;
    let mut fixed: Vec<Option<f64>> = x_k.iter().map(|&v| Some(v)).collect();
    fixed.extend(std::iter::repeat_n(None, m.n_u + m.n_w));
    let next: Vec<Polynomial> =
        m.f.iter()
            .map(|p| p.fix_variables(&fixed))
            .collect::<Result<_>>()?;
    let pd_next = spec.desired_polynomial().substitute(&next)?;
    let now = spec.distance(x_k)?;
    let k = (-&pd_next).add_constant(spec.alpha * now);
    Ok(match sign {
        SignMode::Contraction => k,
        SignMode::Reversed => -&k,
    })
}

/// `clamp(1 - beta * P_D(x_k), 0, 1)`.
pub fn required_probability(spec: &ProblemSpec, x_k: &[f64]) -> Result<f64> {
    Ok((1.0 - spec.beta * spec.distance(x_k)?).clamp(0.0, 1.0))
}

/// Monomial with only the given variables set, used by callers building
/// horizon-space terms by hand.
pub fn horizon_monomial(num_vars: usize, exps: &[(usize, u32)]) -> Monomial {
    let mut v = vec![0u32; num_vars];
    for &(i, e) in exps {
        v[i] += e;
    }
    Monomial::new(v)
}

/// The two-state example system used across unit tests.
#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::poly::{parse_polynomial, var_names};

    fn names(n_x: usize, n_u: usize, n_w: usize) -> Vec<String> {
        let mut v = var_names("x", n_x);
        v.extend(var_names("u", n_u));
        v.extend(var_names("w", n_w));
        v
    }

    pub(crate) fn example1() -> ProblemSpec {
        let vars = names(2, 1, 1);
        let f = vec![
            parse_polynomial("x2", &vars).unwrap(),
            parse_polynomial("x1*x2 + w1 + u1", &vars).unwrap(),
        ];
        let model = SystemModel::new(2, 1, 1, f).unwrap();
        let pd = parse_polynomial("x1^2 + x2^2 - 0.04", &var_names("x", 2)).unwrap();
        let stage = parse_polynomial("x1^2 + x2^2 + u1^2", &names(2, 1, 0)).unwrap();
        ProblemSpec {
            model,
            desired_set: SemialgebraicSet {
                constraints: vec![(pd, Sense::NonPositive)],
                bounds: vec![[-5.0, 5.0]; 2],
            },
            input_set: SemialgebraicSet {
                constraints: vec![],
                bounds: vec![[-1.0, 1.0]; 3],
            },
            disturbance: DisturbanceSpec::uniform(vec![[-0.5, 0.5]]),
            cost: ProblemSpec::summed_stage_cost(&stage, 2, 1, 3).unwrap(),
            alpha: 0.8,
            beta: 0.051,
            horizon: 3,
        }
    }
}
