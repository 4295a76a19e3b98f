use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Exponent vector `alpha` of the monomial `x^alpha`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    exps: Vec<u32>,
}

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Self { exps }
    }

    pub fn one(num_vars: usize) -> Self {
        Self {
            exps: vec![0; num_vars],
        }
    }

    /// The monomial `x_i`.
    pub fn var(num_vars: usize, i: usize) -> Self {
        let mut exps = vec![0; num_vars];
        exps[i] = 1;
        Self { exps }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    pub fn num_vars(&self) -> usize {
        self.exps.len()
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    /// Product of monomials (exponent addition). Both must share a variable count.
    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.exps.len(), other.exps.len());
        Monomial {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scaled(&self, k: u32) -> Monomial {
        Monomial {
            exps: self.exps.iter().map(|e| e * k).collect(),
        }
    }

    /// Concatenation `(alpha, beta)` over the joined variable space.
    pub fn concat(&self, other: &Monomial) -> Monomial {
        let mut exps = self.exps.clone();
        exps.extend_from_slice(&other.exps);
        Monomial { exps }
    }

    pub fn split_at(&self, at: usize) -> (Monomial, Monomial) {
        let (a, b) = self.exps.split_at(at);
        (Monomial::new(a.to_vec()), Monomial::new(b.to_vec()))
    }

    pub fn evaluate(&self, point: &[f64]) -> f64 {
        self.exps
            .iter()
            .zip(point)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &x)| x.powi(e as i32))
            .product()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            for (a, b) in self.exps.iter().rev().zip(other.exps.iter().rev()) {
                match a.cmp(b) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            self.exps.len().cmp(&other.exps.len())
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x^{:?}", self.exps)
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Number of monomials in `n` variables of degree at most `d`.
pub fn basis_len(n: usize, d: u32) -> usize {
    binomial(n + d as usize, n)
}

/// Number of monomials in `n` variables of degree exactly `d`.
fn count_exact(n: usize, d: u32) -> usize {
    if n == 0 {
        return usize::from(d == 0);
    }
    binomial(d as usize + n - 1, n - 1)
}

/// 1-based position of `alpha` in the grevlex enumeration of all monomials in
/// `n` variables.
pub fn grevlex_rank(alpha: &Monomial, n: usize) -> Result<usize> {
    if alpha.num_vars() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alpha.num_vars(),
        });
    }
    Ok(index_of(alpha.exponents()) + 1)
}

/// 0-based grevlex index of an exponent vector. Caller guarantees length.
pub(crate) fn index_of(exps: &[u32]) -> usize {
    let n = exps.len();
    let d: u32 = exps.iter().sum();
    if n == 0 {
        return 0;
    }
    // all monomials of lower total degree come first
    let mut idx = if d == 0 { 0 } else { basis_len(n, d - 1) };
    let mut remaining = d;
    for pos in (1..n).rev() {
        let e = exps[pos];
        // monomials agreeing on later positions with a smaller exponent here
        for t in 0..e {
            idx += count_exact(pos, remaining - t);
        }
        remaining -= e;
    }
    idx
}

/// All monomials in `n` variables of degree at most `d`, in grevlex order.
pub fn monomial_basis(n: usize, d: u32) -> Vec<Monomial> {
    let mut out = Vec::with_capacity(basis_len(n, d));
    for deg in 0..=d {
        let start = out.len();
        let mut cur = vec![0u32; n];
        push_exact(&mut out, &mut cur, 0, deg);
        out[start..].sort();
    }
    out
}

fn push_exact(out: &mut Vec<Monomial>, cur: &mut Vec<u32>, pos: usize, left: u32) {
    let n = cur.len();
    if n == 0 {
        if left == 0 {
            out.push(Monomial::new(Vec::new()));
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = left;
        out.push(Monomial::new(cur.clone()));
        cur[pos] = 0;
        return;
    }
    for e in 0..=left {
        cur[pos] = e;
        push_exact(out, cur, pos + 1, left - e);
    }
    cur[pos] = 0;
}
