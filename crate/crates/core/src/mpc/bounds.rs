//! Reachability bound: steps to reach the `epsilon` level set and a lower
//! bound on the probability of doing so.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ratios within this distance above an integer round down to it, so exact
/// powers of `alpha` are not pushed to the next step by rounding.
const CEIL_SLACK: f64 = 1e-9;

/// `ceil((ln eps - ln p0) / ln alpha)`.
pub fn bound_steps(epsilon: f64, alpha: f64, p0: f64) -> Result<u64> {
    if !(p0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "the initial distance must be positive, got {p0}"
        )));
    }
    if !(epsilon > 0.0 && epsilon < p0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, p0) = (0, {p0}), got {epsilon}"
        )));
    }
    check_alpha(alpha)?;
    let ratio = (epsilon.ln() - p0.ln()) / alpha.ln();
    Ok((ratio - CEIL_SLACK).ceil().max(0.0) as u64)
}

/// `prod_{i=0}^{khat-1} (1 - beta alpha^i)`.
pub fn bound_probability(alpha: f64, beta: f64, khat: u64) -> Result<f64> {
    check_alpha(alpha)?;
    check_beta(beta)?;
    let mut p = 1.0;
    let mut a = 1.0;
    for _ in 0..khat {
        p *= 1.0 - beta * a;
        a *= alpha;
    }
    Ok(p)
}

/// The infinite product, taken until the factors round to one.
pub fn phat_limit(alpha: f64, beta: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_beta(beta)?;
    let mut p = 1.0;
    let mut a = 1.0;
    while 1.0 - beta * a != 1.0 {
        p *= 1.0 - beta * a;
        a *= alpha;
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachabilityBound {
    pub epsilon: f64,
    pub p0: f64,
    pub khat: u64,
    pub phat: f64,
    pub limit: f64,
}

pub fn reachability_bound(
    epsilon: f64,
    alpha: f64,
    beta: f64,
    p0: f64,
) -> Result<ReachabilityBound> {
    let khat = bound_steps(epsilon, alpha, p0)?;
    Ok(ReachabilityBound {
        epsilon,
        p0,
        khat,
        phat: bound_probability(alpha, beta, khat)?,
        limit: phat_limit(alpha, beta)?,
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in (0, 1), got {beta}"
        )));
    }
    Ok(())
}
