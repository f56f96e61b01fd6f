//! Identification of jump-discontinuous PDE coefficients.
//!
//! The pipeline generates reference data with finite-difference solvers,
//! trains a dual network (solution network plus coefficient network) with a
//! gradient-weighted physics-informed loss, fits a Bayesian Gaussian mixture
//! to the sampled coefficient values with a birth-death chain choosing the
//! number of components, and marks grid nodes near coefficient jumps.

pub mod bdmc;
pub mod cases;
pub mod criteria;
pub mod error;
pub mod field;
pub mod forward;
pub mod gmm;
pub mod grid;
pub mod io;
pub mod markov;
pub mod net;
pub mod pinn;
pub mod pipeline;
pub mod problem;
pub mod region;
pub mod schedule;

pub use error::{Error, Result};
