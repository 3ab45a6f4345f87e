//! Currents on parabolic and hyperbolic groups, their special representations,
//! and the two Hilbert-space models (Fock and integral) in which they act.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod currents;
pub mod error;
pub mod exec;
pub mod fock;
pub mod geometry;
pub mod groups;
pub mod intmodel;
pub mod lebesgue;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod specrep;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use exec::Execution;
