//! Divide-and-conquer possibilistic inference.
//!
//! Data are split into blocks, each block is reduced to the summary
//! (block size, maximum likelihood estimate, observed information), and the
//! summaries are combined through a Gaussian working relative likelihood.
//! Possibility contours over the parameter space are then calibrated either
//! by a chi-square approximation (the large-n contour) or by Monte Carlo
//! validification under the posited model (the finite-sample-valid contour),
//! from which confidence regions, hypothesis tests, and coverage experiments
//! follow.

pub mod contours;
pub mod error;
pub mod harness;
pub mod inference;
pub mod io;
pub mod models;
pub mod rng;
pub mod specfun;
pub mod stats;
pub mod summaries;

pub use error::{Error, Result};
