//! Truncated moment sequences and the matrices built from them.
//!
//! A [`MomentSequence`] stores `y_alpha` for every `|alpha| <= max_degree`,
//! indexed by grevlex rank. Moment and localizing matrices are produced both
//! numerically and as index patterns; the relaxation module uses the patterns
//! to assemble affine matrix constraints over unknown moments.

mod disturbance;
mod matrices;

pub use disturbance::{
    disturbance_kinds, disturbance_model, DisturbanceModel, DisturbanceSpec, Uniform,
};
pub use matrices::{
    localizing_matrix, localizing_order, localizing_pattern, moment_matrix, moment_pattern,
    representing_measure_check, MatrixPattern, MeasureCheck,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{basis_len, monomial_basis, Monomial, Polynomial};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSequence {
    num_vars: usize,
    max_degree: u32,
    values: Vec<f64>,
}

impl MomentSequence {
    pub fn new(num_vars: usize, max_degree: u32, values: Vec<f64>) -> Result<Self> {
        let expected = basis_len(num_vars, max_degree);
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            num_vars,
            max_degree,
            values,
        })
    }

    pub fn zeros(num_vars: usize, max_degree: u32) -> Self {
        Self {
            num_vars,
            max_degree,
            values: vec![0.0; basis_len(num_vars, max_degree)],
        }
    }

    /// Builds a sequence by evaluating `f` on each monomial in grevlex order.
    pub fn from_fn(num_vars: usize, max_degree: u32, mut f: impl FnMut(&Monomial) -> f64) -> Self {
        let values = monomial_basis(num_vars, max_degree)
            .iter()
            .map(|m| f(m))
            .collect();
        Self {
            num_vars,
            max_degree,
            values,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mass(&self) -> f64 {
        self.values[0]
    }

    /// `y_alpha`, or `None` when `|alpha|` exceeds the truncation degree.
    pub fn get(&self, alpha: &Monomial) -> Option<f64> {
        if alpha.num_vars() != self.num_vars || alpha.degree() > self.max_degree {
            return None;
        }
        Some(self.values[crate::poly::grevlex_rank(alpha, self.num_vars).ok()? - 1])
    }

    /// `L_y(p) = sum_alpha p_alpha y_alpha`.
    pub fn linear_functional(&self, p: &Polynomial) -> Result<f64> {
        if p.num_vars() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                got: p.num_vars(),
            });
        }
        if p.degree() > self.max_degree {
            return Err(Error::MissingMoments {
                available: self.max_degree,
                required: p.degree(),
            });
        }
        Ok(p.terms()
            .map(|(m, c)| c * self.values[crate::poly::grevlex_rank(m, self.num_vars).unwrap() - 1])
            .sum())
    }

    /// Moments of the marginal over the variables in `keep` (in that order).
    pub fn marginal(&self, keep: &[usize]) -> MomentSequence {
        MomentSequence::from_fn(keep.len(), self.max_degree, |m| {
            let mut full = vec![0u32; self.num_vars];
            for (k, &i) in keep.iter().enumerate() {
                full[i] = m.exponents()[k];
            }
            self.get(&Monomial::new(full))
                .expect("degree within truncation")
        })
    }

    /// Drops moments above degree `d`.
    pub fn truncate(&self, d: u32) -> MomentSequence {
        let d = d.min(self.max_degree);
        MomentSequence {
            num_vars: self.num_vars,
            max_degree: d,
            values: self.values[..basis_len(self.num_vars, d)].to_vec(),
        }
    }
}

/// Moments of the uniform distribution on `[a, b]`.
pub fn uniform_moments(a: f64, b: f64, max_degree: u32) -> Result<MomentSequence> {
    Ok(MomentSequence {
        num_vars: 1,
        max_degree,
        values: Uniform.moments(a, b, max_degree)?,
    })
}

/// Moments of the unit point mass at `point`.
pub fn delta_moments(point: &[f64], max_degree: u32) -> MomentSequence {
    MomentSequence::from_fn(point.len(), max_degree, |m| m.evaluate(point))
}

/// Moments of the product measure over the concatenated variable space.
pub fn product_moments(ys: &[MomentSequence]) -> Result<MomentSequence> {
    let Some(first) = ys.first() else {
        return Err(Error::InvalidParameter("product of zero sequences".into()));
    };
    let d = first.max_degree;
    for y in ys {
        if y.max_degree != d {
            return Err(Error::DegreeMismatch(d, y.max_degree));
        }
    }
    let total: usize = ys.iter().map(|y| y.num_vars).sum();
    Ok(MomentSequence::from_fn(total, d, |m| {
        let mut offset = 0;
        let mut acc = 1.0;
        for y in ys {
            let part = Monomial::new(m.exponents()[offset..offset + y.num_vars].to_vec());
            acc *= y.get(&part).expect("part degree bounded by joint degree");
            offset += y.num_vars;
        }
        acc
    }))
}
