//! Sparse multivariate polynomials over real coefficients.
//!
//! Monomials are ordered by graded reverse lexicographic order: total degree
//! first, then the exponent at the last differing position (smaller ranks
//! earlier). For two variables the order starts `1, x1, x2, x1^2, x1*x2, x2^2`
//! and this ordering is the indexing contract for every moment vector.

mod monomial;
mod parse;
mod polynomial;

pub(crate) use monomial::index_of;
pub use monomial::{basis_len, binomial, grevlex_rank, monomial_basis, Monomial};
pub use parse::{parse_polynomial, var_names, DisplayPoly};
pub use polynomial::{Polynomial, DROP_TOLERANCE};
