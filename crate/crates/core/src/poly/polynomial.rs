use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use super::Monomial;
use crate::error::{Error, Result};

/// Coefficients whose magnitude falls below this after arithmetic are dropped.
pub const DROP_TOLERANCE: f64 = 1e-14;

/// Sparse real polynomial in `num_vars` variables.
///
/// Terms are kept in a grevlex-ordered map and never hold a zero coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    num_vars: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(num_vars: usize) -> Self {
        Self {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: f64) -> Self {
        let mut p = Self::zero(num_vars);
        p.add_term(Monomial::one(num_vars), c);
        p
    }

    /// The polynomial `x_i`.
    pub fn var(num_vars: usize, i: usize) -> Self {
        let mut p = Self::zero(num_vars);
        p.add_term(Monomial::var(num_vars, i), 1.0);
        p
    }

    pub fn monomial(mono: Monomial, coeff: f64) -> Self {
        let mut p = Self::zero(mono.num_vars());
        p.add_term(mono, coeff);
        p
    }

    pub fn from_terms<I>(num_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Monomial, f64)>,
    {
        let mut p = Self::zero(num_vars);
        for (m, c) in terms {
            if m.num_vars() != num_vars {
                return Err(Error::DimensionMismatch {
                    expected: num_vars,
                    got: m.num_vars(),
                });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Maximum total degree over stored terms; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Maximum exponent of variable `i` over stored terms.
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms
            .keys()
            .map(|m| m.exponents()[i])
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending grevlex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, f64)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff(&Monomial::one(self.num_vars))
    }

    /// Accumulates `c * m`, dropping the term if the result cancels.
    pub fn add_term(&mut self, m: Monomial, c: f64) {
        debug_assert_eq!(m.num_vars(), self.num_vars);
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                if c.abs() >= DROP_TOLERANCE {
                    v.insert(c);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s.abs() < DROP_TOLERANCE {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn check_same(&self, other: &Polynomial) -> Result<()> {
        if self.num_vars != other.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                got: other.num_vars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial> {
        self.checked_add(&other.scale(-1.0))
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_same(other)?;
        let mut out = Polynomial::zero(self.num_vars);
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.num_vars);
        for (m, v) in self.terms() {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn add_constant(&self, c: f64) -> Polynomial {
        let mut out = self.clone();
        out.add_term(Monomial::one(self.num_vars), c);
        out
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::constant(self.num_vars, 1.0);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                got: point.len(),
            });
        }
        Ok(self.eval_unchecked(point))
    }

    pub(crate) fn eval_unchecked(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.evaluate(point)).sum()
    }

    /// Composes `self` with `map[i]` substituted for variable `i`.
    ///
    /// All replacements must share one variable space, which becomes the
    /// variable space of the result. The result is fully expanded.
    pub fn substitute(&self, map: &[Polynomial]) -> Result<Polynomial> {
        for i in map.len()..self.num_vars {
            if self.degree_in(i) > 0 {
                return Err(Error::MissingReplacement(i));
            }
        }
        let target = match map.first() {
            Some(p) => p.num_vars,
            None => 0,
        };
        for p in map {
            if p.num_vars != target {
                return Err(Error::DimensionMismatch {
                    expected: target,
                    got: p.num_vars,
                });
            }
        }
        // powers[i][e] = map[i]^e, built lazily up to the largest exponent used
        let mut powers: Vec<Vec<Polynomial>> = Vec::with_capacity(map.len());
        for (i, p) in map.iter().enumerate() {
            let top = if i < self.num_vars {
                self.degree_in(i)
            } else {
                0
            };
            let mut row = vec![Polynomial::constant(target, 1.0)];
            for e in 1..=top {
                let next = &row[e as usize - 1] * p;
                row.push(next);
            }
            powers.push(row);
        }
        let mut out = Polynomial::zero(target);
        for (m, c) in self.terms() {
            let mut term = Polynomial::constant(target, c);
            for (i, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    term = &term * &powers[i][e as usize];
                }
            }
            for (mm, cc) in term.terms() {
                out.add_term(mm.clone(), cc);
            }
        }
        Ok(out)
    }

    /// Re-expresses `self` in a larger variable space, sending variable `i`
    /// to variable `positions[i]` of a `target_vars`-variable space.
    pub fn embed(&self, target_vars: usize, positions: &[usize]) -> Polynomial {
        assert_eq!(positions.len(), self.num_vars, "embedding length");
        let mut out = Polynomial::zero(target_vars);
        for (m, c) in self.terms() {
            let mut exps = vec![0u32; target_vars];
            for (i, &e) in m.exponents().iter().enumerate() {
                exps[positions[i]] += e;
            }
            out.add_term(Monomial::new(exps), c);
        }
        out
    }

    /// Partially evaluates variables with `Some(value)`, keeping the others
    /// (in order) as the variables of the result.
    pub fn fix_variables(&self, values: &[Option<f64>]) -> Result<Polynomial> {
        if values.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                got: values.len(),
            });
        }
        let kept: Vec<usize> = (0..self.num_vars)
            .filter(|&i| values[i].is_none())
            .collect();
        let mut out = Polynomial::zero(kept.len());
        for (m, c) in self.terms() {
            let mut coeff = c;
            let mut exps = Vec::with_capacity(kept.len());
            for (i, &e) in m.exponents().iter().enumerate() {
                match values[i] {
                    Some(v) => coeff *= v.powi(e as i32),
                    None => exps.push(e),
                }
            }
            out.add_term(Monomial::new(exps), coeff);
        }
        Ok(out)
    }

    /// Largest absolute coefficient difference against `other`.
    pub fn max_coeff_diff(&self, other: &Polynomial) -> f64 {
        let mut worst: f64 = 0.0;
        for (m, c) in self.terms() {
            worst = worst.max((c - other.coeff(m)).abs());
        }
        for (m, c) in other.terms() {
            if !self.terms.contains_key(m) {
                worst = worst.max(c.abs());
            }
        }
        worst
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs)
            .expect("polynomial variable spaces differ")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_sub(rhs)
            .expect("polynomial variable spaces differ")
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs)
            .expect("polynomial variable spaces differ")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_polynomial;

    fn p(s: &str, names: &[&str]) -> Polynomial {
        parse_polynomial(s, names).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let set = p("x1^2 + x2^2 - 0.04", &["x1", "x2"]);
        assert!((set.evaluate(&[1.0, 1.0]).unwrap() - 1.96).abs() < 1e-15);
        assert!(set.evaluate(&[0.2, 0.0]).unwrap().abs() < 1e-15);
        let loc = p("2*x1 - 3*x2^2", &["x1", "x2"]);
        assert_eq!(loc.evaluate(&[1.0, 1.0]).unwrap(), -1.0);
        assert!(matches!(
            set.evaluate(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn arithmetic_examples() {
        let names = ["x1", "x2"];
        let prod = &p("x1", &names) * &p("x2", &names);
        assert_eq!(prod, p("x1*x2", &names));
        let sum = &p("x1 + 1", &names) + &p("-x1", &names);
        assert_eq!(sum, Polynomial::constant(2, 1.0));
        assert_eq!(sum.len(), 1);
        assert!(Polynomial::var(2, 0)
            .checked_mul(&Polynomial::var(3, 0))
            .is_err());
    }

    #[test]
    fn substitution_examples() {
        let uw = ["w", "u"];
        let xy = p("x1*x2", &["x1", "x2"]);
        let got = xy
            .substitute(&[Polynomial::constant(2, 1.0), p("w + u", &uw)])
            .unwrap();
        assert_eq!(got, p("w + u", &uw));

        let sq = p("x2^2", &["x1", "x2"]);
        let got = sq
            .substitute(&[Polynomial::zero(2), p("u + w", &uw)])
            .unwrap();
        assert_eq!(got, p("u^2 + 2*u*w + w^2", &uw));

        let err = xy.substitute(&[Polynomial::constant(2, 1.0)]);
        assert!(matches!(err, Err(Error::MissingReplacement(1))));
    }

    #[test]
    fn cancellation_threshold() {
        let a = Polynomial::constant(1, 1.0);
        let b = Polynomial::constant(1, -1.0 + 1e-15);
        assert!((&a + &b).is_zero());
    }

    #[test]
    fn fix_and_embed() {
        let q = p("x1*x2 + x2^2", &["x1", "x2"]);
        let fixed = q.fix_variables(&[Some(2.0), None]).unwrap();
        assert_eq!(fixed, p("2*x1 + x1^2", &["x1"]));
        let e = fixed.embed(3, &[2]);
        assert_eq!(e, p("2*c + c^2", &["a", "b", "c"]));
    }
}
