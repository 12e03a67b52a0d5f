//! Adaptive space-time solver for the semilinear heat equation
//! `u_t - κ u_xx = f(u)` in one space dimension, with a conditional
//! a posteriori bound on the `L∞(L∞)` error and an adaptive driver that
//! follows solutions up to blow-up.

pub mod adapt;
pub mod banded;
pub mod bound;
pub mod dg;
pub mod error;
pub mod estimator;
pub mod fem;
pub mod mesh;
pub mod problems;
pub mod reconstruct;
pub mod scalar;
pub mod time_basis;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double precision aliases.
pub type Mesh = mesh::Mesh1D<f64>;
pub type Space = fem::FemSpace<f64>;
pub type Field = fem::SpatialField<f64>;
pub type Problem = problems::ProblemDef<f64>;
pub type Config = adapt::AdaptConfig<f64>;
pub type Run = adapt::RunResult<f64>;
