//! The up/down staircase protocol and its mean estimator.
//!
//! Loads live on the lattice `L_i = L_ini * d^i`. A failure moves the next
//! experiment one level down, a runout one level up. A finished series is
//! analysed only if, after trimming leading records, the first remaining
//! level is visited again, at least three levels occur, and the outcomes
//! switch at least twice.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{ExperimentSeries, Outcome};
use crate::simulator::SimulatorState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelRounding {
    /// `l_ini * d^i` without rounding.
    ExactGeometric,
    /// Start at `round(l_ini)` and derive each level from its rounded
    /// neighbour, rounding to the nearest integer at every step.
    SequentialInteger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// `L_0 * sum(k * l_k) / sum(l_k)`.
    LiteralEq1,
    /// `L_0 * d^(sum(k * l_k) / sum(l_k))`: the mean level index mapped back
    /// onto the geometric lattice.
    GeometricInterpolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaircaseConfig {
    pub l_ini: f64,
    pub d: f64,
    pub level_rounding: LevelRounding,
    pub estimator: Estimator,
}

impl StaircaseConfig {
    pub fn new(l_ini: f64, d: f64, level_rounding: LevelRounding) -> Result<Self> {
        if !(l_ini.is_finite() && l_ini > 0.0) {
            return Err(domain(format!("l_ini must be positive, got {l_ini}")));
        }
        if !(d.is_finite() && d > 1.0) {
            return Err(domain(format!("step factor d must be > 1, got {d}")));
        }
        if level_rounding == LevelRounding::SequentialInteger && l_ini.round() < 1.0 {
            return Err(domain("l_ini rounds to zero on an integer lattice"));
        }
        Ok(Self { l_ini, d, level_rounding, estimator: Estimator::GeometricInterpolation })
    }

    pub fn with_estimator(mut self, estimator: Estimator) -> Self {
        self.estimator = estimator;
        self
    }

    /// Load of level `index`.
    pub fn level(&self, index: i64) -> f64 {
        match self.level_rounding {
            LevelRounding::ExactGeometric => self.l_ini * self.d.powi(index as i32),
            LevelRounding::SequentialInteger => {
                let mut load = self.l_ini.round();
                for _ in 0..index.unsigned_abs() {
                    load = if index > 0 { (load * self.d).round() } else { (load / self.d).round() };
                    // Steps below 1 N would collapse the lattice.
                    load = load.max(1.0);
                }
                load
            }
        }
    }

    /// Level index of `load`, if it lies on the lattice within tolerance
    /// (0.5 N for integer levels, 1e-9 relative for exact levels).
    pub fn index_of(&self, load: f64) -> Option<i64> {
        if !(load > 0.0) {
            return None;
        }
        let guess = ((load / self.l_ini).ln() / self.d.ln()).round() as i64;
        (guess - 2..=guess + 2).find(|&i| {
            let level = self.level(i);
            match self.level_rounding {
                LevelRounding::SequentialInteger => (level - load).abs() <= 0.5,
                LevelRounding::ExactGeometric => ((level - load) / level).abs() <= 1e-9,
            }
        })
    }
}

/// Loads of the levels in `indices`, ascending by index.
pub fn generate_levels(config: &StaircaseConfig, indices: RangeInclusive<i64>) -> Result<Vec<f64>> {
    if indices.is_empty() {
        return Err(domain("empty level index range"));
    }
    if !indices.contains(&0) {
        return Err(domain("level index range must contain 0"));
    }
    Ok(indices.map(|i| config.level(i)).collect())
}

pub fn next_level(current: i64, outcome: Outcome) -> i64 {
    match outcome {
        Outcome::Failure => current - 1,
        Outcome::Runout => current + 1,
    }
}

/// Level indices and outcomes of a staircase run, in experiment order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StaircaseWalk {
    pub indices: Vec<i64>,
    pub outcomes: Vec<Outcome>,
}

impl StaircaseWalk {
    pub fn next_index(&self) -> i64 {
        match (self.indices.last(), self.outcomes.last()) {
            (Some(&i), Some(&o)) => next_level(i, o),
            _ => 0,
        }
    }

    pub fn record(&mut self, index: i64, outcome: Outcome) {
        self.indices.push(index);
        self.outcomes.push(outcome);
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Runs `n_experiments` steps of the protocol against the simulator.
pub fn run_staircase(
    config: &StaircaseConfig,
    sim: SimulatorState,
    n_experiments: usize,
) -> Result<(ExperimentSeries, SimulatorState)> {
    if n_experiments == 0 {
        return Err(domain("n_experiments must be at least 1"));
    }
    let mut sim = sim;
    let mut walk = StaircaseWalk::default();
    let mut series = ExperimentSeries::default();
    for _ in 0..n_experiments {
        let index = walk.next_index();
        let load = config.level(index);
        let outcome = sim.step(load)?;
        walk.record(index, outcome);
        series.push(load, outcome)?;
    }
    Ok((series, sim))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidityReason {
    InitialLoadNotRevisited,
    FewerThanThreeLevels,
    FewerThanTwoTurningPoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseAnalysis {
    /// Lowest level of the analysed part of the series.
    pub l0: f64,
    /// Visits per level, keyed by level offset above `l0`.
    pub level_counts: BTreeMap<u32, usize>,
    pub mu_hat: f64,
    pub valid: bool,
    pub invalidity_reasons: Vec<InvalidityReason>,
    /// Number of leading records cut before analysis.
    pub trimmed: usize,
}

/// Analyses a recorded series whose loads lie on the config's lattice.
pub fn analyze_staircase(series: &ExperimentSeries, config: &StaircaseConfig) -> Result<StaircaseAnalysis> {
    if series.is_empty() {
        return Err(domain("cannot analyse an empty series"));
    }
    let mut walk = StaircaseWalk::default();
    for r in series.iter() {
        let index = config
            .index_of(r.load)
            .ok_or_else(|| domain(format!("load {} is not on the staircase lattice", r.load)))?;
        walk.record(index, r.outcome);
    }
    Ok(analyze_walk(&walk, config))
}

fn turning_points(outcomes: &[Outcome]) -> usize {
    outcomes.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Analysis on level indices directly.
pub fn analyze_walk(walk: &StaircaseWalk, config: &StaircaseConfig) -> StaircaseAnalysis {
    let n = walk.len();
    let start = (0..n).find(|&s| walk.indices[s + 1..].contains(&walk.indices[s]));

    let mut reasons = Vec::new();
    let from = match start {
        Some(s) => s,
        None => {
            reasons.push(InvalidityReason::InitialLoadNotRevisited);
            0
        }
    };
    let indices = &walk.indices[from..];
    let outcomes = &walk.outcomes[from..];
    let distinct: BTreeSet<i64> = indices.iter().copied().collect();
    if distinct.len() < 3 {
        reasons.push(InvalidityReason::FewerThanThreeLevels);
    }
    if turning_points(outcomes) < 2 {
        reasons.push(InvalidityReason::FewerThanTwoTurningPoints);
    }

    let lowest = indices.iter().copied().min().unwrap_or(0);
    let mut level_counts = BTreeMap::new();
    for &i in indices {
        *level_counts.entry((i - lowest) as u32).or_insert(0usize) += 1;
    }
    let l0 = config.level(lowest);

    if !reasons.is_empty() {
        return StaircaseAnalysis {
            l0,
            level_counts,
            mu_hat: config.l_ini,
            valid: false,
            invalidity_reasons: reasons,
            trimmed: from,
        };
    }

    let total: usize = level_counts.values().sum();
    let weighted: usize = level_counts.iter().map(|(&k, &c)| k as usize * c).sum();
    let mean_k = weighted as f64 / total as f64;
    let mu_hat = match config.estimator {
        Estimator::LiteralEq1 => l0 * mean_k,
        Estimator::GeometricInterpolation => l0 * config.d.powf(mean_k),
    };
    StaircaseAnalysis { l0, level_counts, mu_hat, valid: true, invalidity_reasons: reasons, trimmed: from }
}
