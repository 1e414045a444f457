//! Stochastic fatigue-test oracle.

use crate::error::Result;
use crate::model::{failure_probability, MaterialParams, Outcome};
use crate::rng::{self, StreamRng};

/// Ground truth plus the position in its random stream.
///
/// Each simulated experiment consumes exactly one uniform draw, so a fixed
/// seed and a fixed sequence of loads replay bit-identically.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatorState {
    truth: MaterialParams,
    rng_seed: u64,
    draws: u64,
    rng: StreamRng,
}

impl SimulatorState {
    pub fn new(truth: MaterialParams, rng_seed: u64) -> Self {
        Self { truth, rng_seed, draws: 0, rng: StreamRng::derived(rng_seed, &[rng::stream::SIMULATOR]) }
    }

    pub fn truth(&self) -> &MaterialParams {
        &self.truth
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Samples the outcome of one experiment and returns the advanced state.
    pub fn simulate(&self, load: f64) -> Result<(Outcome, SimulatorState)> {
        let mut next = self.clone();
        let outcome = next.step(load)?;
        Ok((outcome, next))
    }

    /// In-place form of [`simulate`](Self::simulate).
    pub fn step(&mut self, load: f64) -> Result<Outcome> {
        let p = failure_probability(&self.truth, load)?;
        let u = self.rng.uniform();
        self.draws += 1;
        Ok(if u < p { Outcome::Failure } else { Outcome::Runout })
    }
}
