//! Chance-constrained model predictive control for discrete-time polynomial
//! systems with stochastic disturbances.
//!
//! Each control step builds a moment relaxation of the chance-constrained
//! problem, solves it with a dense primal-dual interior-point SDP solver and
//! extracts the control input from the optimal input-moment vector.
//!
//! Module map:
//!
//! * [`poly`] sparse multivariate polynomials in grevlex order
//! * [`moments`] moment sequences, moment and localizing matrices
//! * [`dynamics`] problem data, horizon unrolling, expected cost
//! * [`relaxation`] assembly of the moment SDP
//! * [`sdp`] SDP problem representation, solver, SDPA interchange
//! * [`extraction`] control recovery from input moments
//! * [`mpc`] receding-horizon loop, Monte Carlo validation, reachability bounds
//! * [`config`] JSON problem configuration

pub mod config;
pub mod dynamics;
pub mod error;
pub mod extraction;
pub mod moments;
pub mod mpc;
pub mod poly;
pub mod relaxation;
pub mod sdp;

pub use error::{Error, Result};
