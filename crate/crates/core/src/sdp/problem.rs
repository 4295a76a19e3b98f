use nalgebra::DMatrix;

use crate::moments::MatrixPattern;
use crate::poly::basis_len;

/// `constant + sum coeff * x[var]`, terms sorted by variable and merged.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AffineExpr {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl AffineExpr {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn var(i: usize) -> Self {
        Self {
            constant: 0.0,
            terms: vec![(i, 1.0)],
        }
    }

    pub fn from_terms(constant: f64, terms: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut e = Self {
            constant,
            terms: terms.into_iter().collect(),
        };
        e.normalize();
        e
    }

    /// Sorts terms, merges duplicates and drops exact zeros.
    pub fn normalize(&mut self) {
        self.terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for &(i, c) in &self.terms {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        self.terms = merged;
    }

    pub fn add_scaled(&mut self, other: &AffineExpr, s: f64) {
        self.constant += s * other.constant;
        self.terms
            .extend(other.terms.iter().map(|&(i, c)| (i, s * c)));
        self.normalize();
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Symmetric matrix whose entries are affine in the decision vector.
///
/// Only the upper triangle is stored, so entries `(i, j)` and `(j, i)` always
/// reference the same expression.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdBlock {
    pub name: String,
    dim: usize,
    upper: Vec<AffineExpr>,
}

impl PsdBlock {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        Self {
            name: name.into(),
            dim,
            upper: vec![AffineExpr::default(); dim * (dim + 1) / 2],
        }
    }

    /// Block from a moment pattern whose moment index `k` maps to the affine
    /// expression `moment(k)`.
    pub fn from_pattern(
        name: impl Into<String>,
        pattern: &MatrixPattern,
        mut moment: impl FnMut(usize) -> AffineExpr,
    ) -> Self {
        let mut block = Self::new(name, pattern.dim());
        for (i, j, terms) in pattern.upper_entries() {
            let mut e = AffineExpr::default();
            for &(k, c) in terms {
                e.add_scaled(&moment(k), c);
            }
            block.set(i, j, e);
        }
        block
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.dim - i * (i + 1) / 2 + j
    }

    pub fn set(&mut self, i: usize, j: usize, e: AffineExpr) {
        let s = self.slot(i, j);
        self.upper[s] = e;
    }

    pub fn entry(&self, i: usize, j: usize) -> &AffineExpr {
        &self.upper[self.slot(i, j)]
    }

    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, &AffineExpr)> + '_ {
        (0..self.dim).flat_map(move |i| (i..self.dim).map(move |j| (i, j, self.entry(i, j))))
    }

    pub fn evaluate(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, e) in self.upper_entries() {
            let v = e.evaluate(x);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    pub fn constant_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, e) in self.upper_entries() {
            m[(i, j)] = e.constant;
            m[(j, i)] = e.constant;
        }
        m
    }
}

/// Named contiguous range of the decision vector holding a moment sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub num_vars: usize,
    pub max_degree: u32,
}

impl Segment {
    pub fn len(&self) -> usize {
        basis_len(self.num_vars, self.max_degree)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SdpProblem {
    pub num_vars: usize,
    pub segments: Vec<Segment>,
    pub objective: AffineExpr,
    pub blocks: Vec<PsdBlock>,
    /// Each expression must equal zero.
    pub equalities: Vec<AffineExpr>,
    /// Each expression must be nonnegative.
    pub inequalities: Vec<AffineExpr>,
}

impl SdpProblem {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            ..Self::default()
        }
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    pub fn block(&self, name: &str) -> Option<&PsdBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.evaluate(x)
    }
}
