//! Monte Carlo estimate of the protected event's probability.
//!
//! Draws come from ChaCha20 (`rand_chacha` 0.9) seeded with
//! `seed_from_u64(seed)`. Sample `i` of a stream consumes the `n_w`
//! consecutive 64-bit outputs starting at output `i * n_w`, so any chunking
//! of the sample range yields the same draws. A 64-bit output `v` maps to
//! `(v >> 11) * 2^-53` in `[0, 1)` and then through the inverse CDF of the
//! disturbance law.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{constraint_polynomial, ProblemSpec, SignMode};
use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 100;

/// Stream used for closed-loop disturbance draws; validation at step `k`
/// uses stream `k + 1`.
pub const DISTURBANCE_STREAM: u64 = 0;

const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub probability: f64,
    /// 95% normal-approximation halfwidth.
    pub halfwidth: f64,
    pub successes: u64,
    pub samples: u64,
}

impl McEstimate {
    fn from_counts(successes: u64, samples: u64) -> Self {
        let p = successes as f64 / samples as f64;
        Self {
            probability: p,
            halfwidth: 1.96 * (p * (1.0 - p) / samples as f64).sqrt(),
            successes,
            samples,
        }
    }
}

fn unit_interval(v: u64) -> f64 {
    (v >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Generator positioned at sample `index` of `stream`.
fn generator(seed: u64, stream: u64, index: u64, n_w: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    // two 32-bit words per output
    rng.set_word_pos(index as u128 * n_w as u128 * 2);
    rng
}

/// Disturbance sample `index` of `stream`.
pub fn draw_disturbance(spec: &ProblemSpec, seed: u64, stream: u64, index: u64) -> Vec<f64> {
    let n_w = spec.disturbance.dim();
    let mut rng = generator(seed, stream, index, n_w);
    let uniforms: Vec<f64> = (0..n_w).map(|_| unit_interval(rng.next_u64())).collect();
    let mut out = vec![0.0; n_w];
    spec.disturbance.sample_from_uniforms(&uniforms, &mut out);
    out
}

/// Frequency of the protected event at `x_k` under first-step input `u_k`.
///
/// A disturbance interval of zero width is a point mass.
pub fn mc_validate(
    spec: &ProblemSpec,
    x_k: &[f64],
    u_k: &[f64],
    samples: usize,
    seed: u64,
    stream: u64,
    sign: SignMode,
) -> Result<McEstimate> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_SAMPLES} Monte Carlo samples are required, got {samples}"
        )));
    }
    let (n_u, n_w) = (spec.model.n_u, spec.model.n_w);
    if u_k.len() != n_u {
        return Err(Error::DimensionMismatch {
            expected: n_u,
            got: u_k.len(),
        });
    }
    let model = spec.disturbance.model()?;
    let event = constraint_polynomial(spec, x_k, sign)?;
    let fixed: Vec<Option<f64>> = u_k
        .iter()
        .map(|&v| Some(v))
        .chain(std::iter::repeat_n(None, n_w))
        .collect();
    let event = event.fix_variables(&fixed)?;

    let chunks = samples.div_ceil(CHUNK);
    let successes: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(samples);
            let mut rng = generator(seed, stream, start as u64, n_w);
            let mut w = vec![0.0; n_w];
            let mut hits = 0u64;
            for _ in start..end {
                for (wi, &[lo, hi]) in w.iter_mut().zip(&spec.disturbance.bounds) {
                    *wi = model.quantile(lo, hi, unit_interval(rng.next_u64()));
                }
                if event.eval_unchecked(&w) >= 0.0 {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    Ok(McEstimate::from_counts(successes, samples as u64))
}
