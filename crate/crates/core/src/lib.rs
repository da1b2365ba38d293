//! Simulation library for marked Poisson cluster risk models.
//!
//! Three cluster mechanisms over a homogeneous Poisson immigration stream
//! (mixed binomial, renewal, marked Hawkes), the total claim amount S(t)
//! with its cluster decomposition, closed-form moment and tail analytics,
//! an independent thinning-based Hawkes oracle, and a Monte Carlo harness
//! that verifies the central-limit and alpha-stable behaviour of S(t)
//! against exact formulas.

pub mod analytics;
pub mod cluster;
pub mod distributions;
pub mod error;
// pub mod harness;
pub mod process;
pub mod rng;
pub mod special;
pub mod stats;
pub mod thinning;

pub use error::{Error, Result};
pub use rng::RngStream;
