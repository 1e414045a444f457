//! Sequential estimation of the mean fatigue strength of a material.
//!
//! A Gaussian-process prior over log10 of the mean strength is combined with
//! the log-normal failure model into a grid posterior, from which the next
//! test load is chosen either at the current MAP estimate or by expected
//! entropy reduction. A staircase implementation and a stochastic test
//! simulator serve as the benchmark.

pub mod error;
pub mod gp;
pub mod inference;
pub mod lab;
pub mod model;
pub mod normal;
pub mod optim;
pub mod rng;
pub mod simulator;
pub mod staircase;
pub mod study;

pub use error::{Error, Result};
