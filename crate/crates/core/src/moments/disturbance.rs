//! Disturbance distributions, registered by kind name.

use serde::{Deserialize, Serialize};

use super::{product_moments, MomentSequence};
use crate::error::{Error, Result};
use crate::poly::binomial;

/// A one-dimensional distribution family parameterised by a support interval.
pub trait DisturbanceModel: Send + Sync {
    fn name(&self) -> &'static str;

    /// Raw moments `E[w^j]` for `j = 0..=max_degree` on `[lo, hi]`.
    fn moments(&self, lo: f64, hi: f64, max_degree: u32) -> Result<Vec<f64>>;

    /// Inverse CDF at `p` in `[0, 1)`.
    fn quantile(&self, lo: f64, hi: f64, p: f64) -> f64;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Uniform;

impl DisturbanceModel for Uniform {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn moments(&self, a: f64, b: f64, max_degree: u32) -> Result<Vec<f64>> {
        if !(a < b) {
            return Err(Error::InvalidInterval { lo: a, hi: b });
        }
        Ok((0..=max_degree)
            .map(|j| {
                let k = (j + 1) as i32;
                (b.powi(k) - a.powi(k)) / (k as f64 * (b - a))
            })
            .collect())
    }

    fn quantile(&self, lo: f64, hi: f64, p: f64) -> f64 {
        lo + (hi - lo) * p
    }
}

static MODELS: &[&dyn DisturbanceModel] = &[&Uniform];

pub fn disturbance_kinds() -> Vec<&'static str> {
    MODELS.iter().map(|m| m.name()).collect()
}

pub fn disturbance_model(name: &str) -> Result<&'static dyn DisturbanceModel> {
    MODELS
        .iter()
        .copied()
        .find(|m| m.name() == name)
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "disturbance kind",
            name: name.to_string(),
            known: disturbance_kinds().join(", "),
        })
}

/// Independent per-coordinate disturbance, identically distributed across
/// time steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub kind: String,
    /// `[lo, hi]` support per coordinate.
    pub bounds: Vec<[f64; 2]>,
}

impl DisturbanceSpec {
    pub fn uniform(bounds: Vec<[f64; 2]>) -> Self {
        Self {
            kind: "uniform".into(),
            bounds,
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn model(&self) -> Result<&'static dyn DisturbanceModel> {
        disturbance_model(&self.kind)
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        for &[lo, hi] in &self.bounds {
            if !(lo < hi) {
                return Err(Error::InvalidInterval { lo, hi });
            }
        }
        Ok(())
    }

    /// Raw moments of coordinate `i` after the affine change of variable
    /// `w = center + half_width * v`, i.e. moments of `v`.
    pub fn scaled_moments(
        &self,
        i: usize,
        center: f64,
        half_width: f64,
        max_degree: u32,
    ) -> Result<Vec<f64>> {
        let [lo, hi] = self.bounds[i];
        let raw = self.model()?.moments(lo, hi, max_degree)?;
        // E[((w - c)/h)^j] = h^-j sum_i C(j,i) E[w^i] (-c)^(j-i)
        Ok((0..=max_degree as usize)
            .map(|j| {
                let s: f64 = (0..=j)
                    .map(|i| binomial(j, i) as f64 * raw[i] * (-center).powi((j - i) as i32))
                    .sum();
                s / half_width.powi(j as i32)
            })
            .collect())
    }

    /// Joint moments of one time step's disturbance vector.
    pub fn joint_moments(&self, max_degree: u32) -> Result<MomentSequence> {
        let parts = (0..self.dim())
            .map(|i| {
                let [lo, hi] = self.bounds[i];
                MomentSequence::new(1, max_degree, self.model()?.moments(lo, hi, max_degree)?)
            })
            .collect::<Result<Vec<_>>>()?;
        product_moments(&parts)
    }

    /// Maps one uniform `[0,1)` variate per coordinate to a disturbance sample.
    pub fn sample_from_uniforms(&self, uniforms: &[f64], out: &mut [f64]) {
        let model = self.model().expect("validated disturbance kind");
        for ((o, &[lo, hi]), &p) in out.iter_mut().zip(&self.bounds).zip(uniforms) {
            *o = model.quantile(lo, hi, p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup() {
        assert_eq!(disturbance_model("uniform").unwrap().name(), "uniform");
        let err = disturbance_model("gaussian").err().unwrap();
        assert!(err.to_string().contains("uniform"));
    }

    #[test]
    fn scaled_uniform_is_standard() {
        let spec = DisturbanceSpec::uniform(vec![[-0.5, 0.5], [1.0, 3.0]]);
        let m = spec.scaled_moments(0, 0.0, 0.5, 4).unwrap();
        let want = [1.0, 0.0, 1.0 / 3.0, 0.0, 0.2];
        for (g, w) in m.iter().zip(want) {
            assert!((g - w).abs() < 1e-14);
        }
        let m = spec.scaled_moments(1, 2.0, 1.0, 4).unwrap();
        for (g, w) in m.iter().zip(want) {
            assert!((g - w).abs() < 1e-13);
        }
    }

    #[test]
    fn quantile_maps_interval() {
        let spec = DisturbanceSpec::uniform(vec![[-0.5, 0.5]]);
        let mut out = [0.0];
        spec.sample_from_uniforms(&[0.25], &mut out);
        assert_eq!(out[0], -0.25);
    }
}
