//! Numerical laboratory for heavy-tailed stochastic gradient descent.
//!
//! The crate is organised bottom-up:
//!
//! * [`stable`] draws symmetric alpha-stable variates and Levy increments.
//! * [`tail_index`] estimates the tail-index from samples and from
//!   minibatch gradient noise.
//! * [`stability`] runs the sum-stability condition-number test.
//! * [`objective`] holds the test objectives and assumption checkers.
//! * [`sde`] simulates the Euler scheme of the Brownian plus Levy driven SDE
//!   and measures exit times, transitions and valley occupancy.
//! * [`metastability`] evaluates the small-noise predictions (valley-hopping
//!   generator, stationary law, exit-time law).
//! * [`convergence`] benchmarks heavy-tailed SGD against its rate bound.
//! * [`nn`] trains small fully-connected networks and measures the tail-index
//!   of their gradient noise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convergence;
pub mod error;
pub mod metastability;
pub mod nn;
pub mod objective;
pub mod report;
pub mod rng;
pub mod sde;
pub mod stability;
pub mod stable;
pub mod stats;
pub mod tail_index;

pub use error::{Error, Result};
pub use objective::Objective;
pub use rng::RngStream;
pub use stable::StableParams;
pub use tail_index::TailEstimate;
