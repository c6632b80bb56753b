//! Pseudospectral solver and verification harness for semilinear heat and
//! fractional-diffusion Cauchy problems with exponential nonlinearity.

pub mod config;
pub mod data;
pub mod decay;
pub mod error;
pub mod grid;
pub mod nonlin;
pub mod orlicz;
pub mod semigroup;
pub mod snapshot;
pub mod solver;

pub use error::{Error, Result};
