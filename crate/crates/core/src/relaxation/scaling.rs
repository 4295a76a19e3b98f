use serde::{Deserialize, Serialize};

use crate::dynamics::ProblemSpec;
use crate::error::{Error, Result};
use crate::poly::Polynomial;

use super::RelaxationConfig;

/// Per-coordinate affine change of variable `orig = center + half_width * scaled`
/// for inputs and disturbances, shared by all time steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineScaling {
    pub input_center: Vec<f64>,
    pub input_half_width: Vec<f64>,
    pub disturbance_center: Vec<f64>,
    pub disturbance_half_width: Vec<f64>,
}

impl AffineScaling {
    pub fn identity(n_u: usize, n_w: usize) -> Self {
        Self {
            input_center: vec![0.0; n_u],
            input_half_width: vec![1.0; n_u],
            disturbance_center: vec![0.0; n_w],
            disturbance_half_width: vec![1.0; n_w],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.input_center
            .iter()
            .chain(&self.disturbance_center)
            .all(|&c| c == 0.0)
            && self
                .input_half_width
                .iter()
                .chain(&self.disturbance_half_width)
                .all(|&h| h == 1.0)
    }

    /// Maps stacked scaled inputs back to original units.
    pub fn inputs_to_original(&self, scaled: &[f64]) -> Vec<f64> {
        let n_u = self.input_center.len();
        scaled
            .iter()
            .enumerate()
            .map(|(i, s)| self.input_center[i % n_u] + self.input_half_width[i % n_u] * s)
            .collect()
    }

    /// Maps stacked original inputs to scaled units.
    pub fn inputs_to_scaled(&self, original: &[f64]) -> Vec<f64> {
        let n_u = self.input_center.len();
        original
            .iter()
            .enumerate()
            .map(|(i, u)| (u - self.input_center[i % n_u]) / self.input_half_width[i % n_u])
            .collect()
    }
}

/// Rescales every input and disturbance coordinate so its box becomes
/// `[-1, 1]` (the hull over time steps for inputs). Returns the rewritten
/// problem and the map back. With `cfg.scale` off the map is the identity.
pub fn scale_problem(
    spec: &ProblemSpec,
    cfg: &RelaxationConfig,
) -> Result<(ProblemSpec, AffineScaling)> {
    let n_x = spec.model.n_x;
    let n_u = spec.model.n_u;
    let n_w = spec.model.n_w;
    if !cfg.scale {
        return Ok((spec.clone(), AffineScaling::identity(n_u, n_w)));
    }
    let mut scaling = AffineScaling::identity(n_u, n_w);
    for j in 0..n_u {
        let (lo, hi) = (0..spec.horizon)
            .map(|i| spec.input_set.bounds[i * n_u + j])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| {
                (lo.min(b[0]), hi.max(b[1]))
            });
        (scaling.input_center[j], scaling.input_half_width[j]) = center_width(lo, hi)?;
    }
    for j in 0..n_w {
        let [lo, hi] = spec.disturbance.bounds[j];
        (
            scaling.disturbance_center[j],
            scaling.disturbance_half_width[j],
        ) = center_width(lo, hi)?;
    }
    if scaling.is_identity() {
        return Ok((spec.clone(), scaling));
    }

    let mut out = spec.clone();
    let nv = spec.model.num_vars();
    let affine = |num_vars: usize, i: usize, c: f64, h: f64| {
        Polynomial::var(num_vars, i).scale(h).add_constant(c)
    };

    let mut map: Vec<Polynomial> = (0..n_x).map(|i| Polynomial::var(nv, i)).collect();
    map.extend((0..n_u).map(|j| {
        affine(
            nv,
            n_x + j,
            scaling.input_center[j],
            scaling.input_half_width[j],
        )
    }));
    map.extend((0..n_w).map(|j| {
        affine(
            nv,
            n_x + n_u + j,
            scaling.disturbance_center[j],
            scaling.disturbance_half_width[j],
        )
    }));
    out.model.f = spec
        .model
        .f
        .iter()
        .map(|p| p.substitute(&map))
        .collect::<Result<_>>()?;

    let n_in = spec.num_inputs();
    let input_map: Vec<Polynomial> = (0..n_in)
        .map(|i| {
            affine(
                n_in,
                i,
                scaling.input_center[i % n_u],
                scaling.input_half_width[i % n_u],
            )
        })
        .collect();
    for (p, _) in &mut out.input_set.constraints {
        *p = p.substitute(&input_map)?;
    }
    for (i, b) in out.input_set.bounds.iter_mut().enumerate() {
        let (c, h) = (
            scaling.input_center[i % n_u],
            scaling.input_half_width[i % n_u],
        );
        *b = [(b[0] - c) / h, (b[1] - c) / h];
    }
    for (j, b) in out.disturbance.bounds.iter_mut().enumerate() {
        let (c, h) = (
            scaling.disturbance_center[j],
            scaling.disturbance_half_width[j],
        );
        *b = [(b[0] - c) / h, (b[1] - c) / h];
    }

    let nc = spec.cost.num_vars();
    let n_states = spec.horizon * n_x;
    let mut cost_map: Vec<Polynomial> = (0..n_states).map(|i| Polynomial::var(nc, i)).collect();
    cost_map.extend((0..n_in).map(|i| {
        affine(
            nc,
            n_states + i,
            scaling.input_center[i % n_u],
            scaling.input_half_width[i % n_u],
        )
    }));
    out.cost = spec.cost.substitute(&cost_map)?;
    Ok((out, scaling))
}

fn center_width(lo: f64, hi: f64) -> Result<(f64, f64)> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidInterval { lo, hi });
    }
    Ok(((lo + hi) / 2.0, (hi - lo) / 2.0))
}
