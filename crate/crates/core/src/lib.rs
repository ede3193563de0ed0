//! Finite-volume simulator and entropy-method certification for a
//! two-species electro-energy-reaction-diffusion system in one dimension.

// `!(x >= lo)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod functionals;
pub mod grid;
pub mod model;
pub mod poisson;
pub mod scenario;
pub mod simulator;
pub mod state;
pub mod verifier;

pub use error::{Error, Result};
