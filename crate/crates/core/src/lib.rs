//! Nilpotent Lie group arithmetic, drift-induced weight filtrations, free Lie
//! algebra combinatorics and Monte Carlo harnesses for limit theorems of random
//! walks on nilpotent groups.

pub mod config;
pub mod error;
pub mod filtration;
pub mod fourier;
pub mod free_symbolic;
pub mod homogeneous;
pub mod lie_core;
pub mod limit_law;
pub mod linalg;
pub mod measures;
pub mod parallel;
pub mod scalar;
pub mod stats;
pub mod walk_sim;

pub use error::{Error, Result};
pub use lie_core::NilpotentAlgebra;
pub use scalar::{Scalar, Q};
