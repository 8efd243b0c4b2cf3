//! Interacting integrable tops built from associative Yang-Baxter R-matrices.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod rmatrix;
pub mod rng;
pub mod specfun;
pub mod tensor;

pub use error::{Error, Result};
pub use num_complex::Complex64;
