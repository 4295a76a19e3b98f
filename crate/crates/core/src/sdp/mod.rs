//! Small dense semidefinite programs in affine (LMI) form.
//!
//! ```text
//! minimize    c0 + c^T x
//! subject to  F_j(x) = F_j0 + sum_i x_i F_ji  >= 0   (PSD blocks)
//!             a_k^T x + b_k  = 0                  (equalities)
//!             g_l^T x + h_l >= 0                  (scalar inequalities)
//! ```

mod certificate;
mod direction;
mod problem;
mod psd;
pub mod sdpa;
mod solver;

pub use certificate::{check_certificate, Certificate};
pub use direction::{
    search_direction, search_directions, HkmDirection, NtDirection, SearchDirection,
};
pub use problem::{AffineExpr, PsdBlock, SdpProblem, Segment};
pub use psd::{max_step_to_boundary, min_eigenvalue, psd_check};
pub use solver::{solve, SdpSolution, SolverSettings, SolverStatus};
