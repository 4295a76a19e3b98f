//! Recovery of the control input from an optimal input-moment vector.
//!
//! When the input measure is a point mass its first-order moments are the
//! point itself and its moment matrix has rank one. Both are checked here;
//! the caller decides what to do with an uncertified result.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{moment_matrix, MomentSequence};
use crate::poly::{index_of, monomial_basis};

pub const DEFAULT_RANK_TOL: f64 = 1e-3;

/// Mass deviation from one tolerated before the moments are renormalized.
const MASS_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub u_star: Vec<f64>,
    /// `sigma_2 / sigma_1` of `M_r(y_u)`; zero for a 1x1 matrix.
    pub rank_ratio: f64,
    pub certified: bool,
    pub trace: f64,
    /// Largest `|y_{2a} - (u*)^{2a}|` over `|a| <= r`.
    pub consistency: f64,
}

pub fn extract_control(y_u: &MomentSequence, r: u32, rank_tol: f64) -> Result<ExtractionResult> {
    let mass = y_u.mass();
    if !(mass.abs() > f64::EPSILON) {
        return Err(Error::ZeroMass);
    }
    if (mass - 1.0).abs() > MASS_TOL {
        log::warn!("input moments have mass {mass}; renormalizing");
    }
    let n = y_u.num_vars();
    let values = y_u.values();
    let u_star: Vec<f64> = (0..n).map(|i| values[1 + i] / mass).collect();

    let m = moment_matrix(y_u, r)?;
    let trace = m.trace();
    let sv = m.singular_values();
    let mut sv: Vec<f64> = sv.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let rank_ratio = match sv.as_slice() {
        [s1, s2, ..] if *s1 > 0.0 => s2 / s1,
        [_, _, ..] => 1.0,
        _ => 0.0,
    };

    let consistency = monomial_basis(n, r)
        .iter()
        .map(|a| {
            let a2 = a.scaled(2);
            let y = values[index_of(a2.exponents())] / mass;
            (y - a2.evaluate(&u_star)).abs()
        })
        .fold(0.0, f64::max);

    Ok(ExtractionResult {
        u_star,
        rank_ratio,
        certified: rank_ratio < rank_tol,
        trace,
        consistency,
    })
}
