//! Grid-evaluated Bayesian inference over the mean fatigue strength.
//!
//! The unnormalized posterior is
//!
//! ```text
//! g(mu, sigma) = p(mu) * p(sigma) * prod_fail Phi(l_i) * prod_runout (1 - Phi(l_j))
//! ```
//!
//! with `p(mu)` normal over `log10 mu`. Everything is accumulated in log
//! space. The posterior is evaluated on an equidistant `log10 mu` grid spanning
//! the prior mean +/- two prior standard deviations; that grid serves the
//! posterior standard deviation and the entropy-based acquisition function.
//!
//! Two acquisition rules pick the next load:
//!
//! * [`acquire_entropy`] maximizes the expected negative entropy of the
//!   posterior after one more experiment, weighting the failure and runout
//!   branches by the failure probability under the current MAP estimate;
//! * [`acquire_map`] simply proposes the current MAP estimate of `mu`.

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::gp::PredictiveNormal;
use crate::model::{z_score, ExperimentSeries, Outcome};
use crate::normal;
use crate::optim::{spread, NelderMead};
use crate::rng::StreamRng;

/// Default number of grid points.
pub const DEFAULT_GRID_POINTS: usize = 100_000;
/// Default number of weighted samples for the entropy approximation.
pub const DEFAULT_ENTROPY_SAMPLES: usize = 10_000;
/// Default number of simplex restarts.
pub const DEFAULT_RESTARTS: usize = 8;

/// Prior over the scatter `sigma_l`.
///
/// `Fixed` pins `sigma_l` itself. The distributional variants are densities
/// over the positive exponent `s = log10(sigma_l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaPrior {
    Fixed { sigma_l: f64 },
    PositiveUniform { lo_log10: f64, hi_log10: f64 },
    Gamma { shape: f64, rate: f64 },
}

impl SigmaPrior {
    fn validate(&self) -> Result<()> {
        match *self {
            SigmaPrior::Fixed { sigma_l } if !(sigma_l.is_finite() && sigma_l > 1.0) => {
                Err(domain(format!("fixed sigma_l must be > 1, got {sigma_l}")))
            }
            SigmaPrior::PositiveUniform { lo_log10, hi_log10 } if !(lo_log10 > 0.0 && hi_log10 > lo_log10) => {
                Err(domain(format!("uniform scatter prior needs 0 < lo < hi, got [{lo_log10}, {hi_log10}]")))
            }
            SigmaPrior::Gamma { shape, rate } if !(shape > 0.0 && rate > 0.0) => {
                Err(domain(format!("gamma scatter prior needs positive shape and rate, got ({shape}, {rate})")))
            }
            _ => Ok(()),
        }
    }

    /// `log p(s)` for the scatter exponent `s = log10(sigma_l)`.
    pub fn log_density(&self, scatter_log10: f64) -> f64 {
        match *self {
            SigmaPrior::Fixed { sigma_l } => {
                if scatter_log10 == sigma_l.log10() {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            SigmaPrior::PositiveUniform { lo_log10, hi_log10 } => {
                if (lo_log10..=hi_log10).contains(&scatter_log10) {
                    -(hi_log10 - lo_log10).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            SigmaPrior::Gamma { shape, rate } => {
                if scatter_log10 <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                shape * rate.ln() - libm::lgamma(shape) + (shape - 1.0) * scatter_log10.ln() - rate * scatter_log10
            }
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, SigmaPrior::Fixed { .. })
    }

    /// Search interval for `s` when the prior is distributional.
    fn scatter_bounds(&self) -> (f64, f64) {
        match *self {
            SigmaPrior::Fixed { sigma_l } => (sigma_l.log10(), sigma_l.log10()),
            SigmaPrior::PositiveUniform { lo_log10, hi_log10 } => (lo_log10, hi_log10),
            SigmaPrior::Gamma { shape, rate } => {
                let mean = shape / rate;
                let sd = shape.sqrt() / rate;
                (1e-4_f64.min(mean / 10.0), mean + 10.0 * sd)
            }
        }
    }

    fn typical_scatter(&self) -> f64 {
        match *self {
            SigmaPrior::Fixed { sigma_l } => sigma_l.log10(),
            SigmaPrior::PositiveUniform { lo_log10, hi_log10 } => (lo_log10 * hi_log10).sqrt(),
            SigmaPrior::Gamma { shape, rate } => {
                if shape >= 1.0 {
                    ((shape - 1.0) / rate).max(shape / rate / 10.0)
                } else {
                    shape / rate
                }
            }
        }
    }
}

/// How a prior width given in load units maps onto the `log10 mu` scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WidthScale {
    /// The width is the standard deviation of `mu` in N. The prior is the
    /// log-normal with median at the prior mean whose standard deviation in N
    /// equals the width.
    #[default]
    Load,
    /// The width is `10^std_log10`, i.e. `std_log10 = log10(width)`.
    Log10Exponent,
}

/// Standard deviation of `log10 mu` for a prior of the given width.
pub fn prior_std_log10(mean_load: f64, width: f64, scale: WidthScale) -> Result<f64> {
    if !(mean_load > 0.0 && mean_load.is_finite()) {
        return Err(domain(format!("prior mean must be a positive load, got {mean_load}")));
    }
    match scale {
        WidthScale::Load => {
            if !(width > 0.0 && width.is_finite()) {
                return Err(domain(format!("prior width must be positive, got {width}")));
            }
            // Var[X] = m^2 e^{v} (e^{v} - 1) for X = m e^{sqrt(v) Z}; solve for v.
            let r = width / mean_load;
            let e_v = 0.5 * (1.0 + (1.0 + 4.0 * r * r).sqrt());
            let v = if r < 1e-4 { (r * r).ln_1p() } else { e_v.ln() };
            Ok(v.sqrt() / std::f64::consts::LN_10)
        }
        WidthScale::Log10Exponent => {
            if !(width > 1.0 && width.is_finite()) {
                return Err(domain(format!("log10-exponent width must be > 1, got {width}")));
            }
            Ok(width.log10())
        }
    }
}

/// Joint prior over `(mu, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub mu_prior: PredictiveNormal,
    pub sigma_prior: SigmaPrior,
}

impl PriorSpec {
    pub fn new(mu_prior: PredictiveNormal, sigma_prior: SigmaPrior) -> Result<Self> {
        let p = Self { mu_prior, sigma_prior };
        p.validate()?;
        Ok(p)
    }

    /// Normal prior on `log10 mu` with a fixed scatter.
    pub fn fixed(mean_log10: f64, std_log10: f64, sigma_l: f64) -> Result<Self> {
        Self::new(PredictiveNormal::new(mean_log10, std_log10)?, SigmaPrior::Fixed { sigma_l })
    }

    /// Prior centred on `mean_load` with a width in load terms.
    pub fn from_width(mean_load: f64, width: f64, scale: WidthScale, sigma_prior: SigmaPrior) -> Result<Self> {
        let std = prior_std_log10(mean_load, width, scale)?;
        Self::new(PredictiveNormal::new(mean_load.log10(), std)?, sigma_prior)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_prior.std_log10 > 0.0 && self.mu_prior.std_log10.is_finite()) {
            return Err(domain(format!("prior std must be positive, got {}", self.mu_prior.std_log10)));
        }
        if !self.mu_prior.mean_log10.is_finite() {
            return Err(domain("prior mean must be finite"));
        }
        self.sigma_prior.validate()
    }

    /// `log10 mu` interval of +/- two prior standard deviations.
    pub fn support(&self) -> (f64, f64) {
        let m = self.mu_prior.mean_log10;
        let s = self.mu_prior.std_log10;
        (m - 2.0 * s, m + 2.0 * s)
    }

    /// The prior mode as a load.
    pub fn mode_load(&self) -> f64 {
        10f64.powf(self.mu_prior.mean_log10)
    }

    fn log_prior(&self, mu_log10: f64, scatter_log10: f64) -> f64 {
        normal::log_pdf(mu_log10, self.mu_prior.mean_log10, self.mu_prior.std_log10)
            + self.sigma_prior.log_density(scatter_log10)
    }
}

/// A series flattened into `(log10 load, failed)` pairs.
#[derive(Debug, Clone, Default)]
struct Observations {
    log_loads: Vec<f64>,
    failures: Vec<bool>,
}

impl Observations {
    fn new(series: &ExperimentSeries) -> Self {
        Self {
            log_loads: series.iter().map(|r| r.load.log10()).collect(),
            failures: series.iter().map(|r| r.outcome.is_failure()).collect(),
        }
    }

    fn log_likelihood(&self, mu_log10: f64, scatter_log10: f64) -> f64 {
        self.log_loads
            .iter()
            .zip(&self.failures)
            .map(|(&l, &f)| term(l, f, mu_log10, scatter_log10))
            .sum()
    }
}

#[inline]
fn term(load_log10: f64, failed: bool, mu_log10: f64, scatter_log10: f64) -> f64 {
    let z = z_score(load_log10, mu_log10, scatter_log10);
    if failed {
        normal::log_cdf(z)
    } else {
        normal::log_sf(z)
    }
}

fn check_load(load: f64) -> Result<()> {
    if load > 0.0 && load.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("load must be positive, got {load}")))
    }
}

/// `log g(mu, sigma)`: log prior plus series log-likelihood.
pub fn log_posterior(prior: &PriorSpec, series: &ExperimentSeries, mu: f64, sigma: f64) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(domain(format!("mu must be positive, got {mu}")));
    }
    if !(sigma > 1.0 && sigma.is_finite()) {
        return Err(domain(format!("sigma must be > 1, got {sigma}")));
    }
    let (x, s) = (mu.log10(), sigma.log10());
    let lp = match prior.sigma_prior {
        SigmaPrior::Fixed { sigma_l } if sigma == sigma_l => {
            normal::log_pdf(x, prior.mu_prior.mean_log10, prior.mu_prior.std_log10)
        }
        _ => prior.log_prior(x, s),
    };
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    Ok(lp + Observations::new(series).log_likelihood(x, s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapEstimate {
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub log_posterior_at_map: f64,
}

impl MapEstimate {
    pub fn mu_log10(&self) -> f64 {
        self.mu_hat.log10()
    }

    pub fn scatter_log10(&self) -> f64 {
        self.sigma_hat.log10()
    }

    /// Failure probability at `load` under the estimated parameters.
    pub fn failure_probability(&self, load: f64) -> f64 {
        normal::cdf(z_score(load.log10(), self.mu_log10(), self.scatter_log10()))
    }
}

/// Maximizes the posterior with a multi-start simplex search.
///
/// `mu` is searched over `log10 mu` within the prior's +/- 2 std support.
/// With a distributional scatter prior, `ln(log10 sigma)` is searched jointly.
pub fn map_estimate(prior: &PriorSpec, series: &ExperimentSeries, restarts: usize) -> Result<MapEstimate> {
    if restarts == 0 {
        return Err(config("restarts must be at least 1"));
    }
    prior.validate()?;
    let obs = Observations::new(series);
    let (lo, hi) = prior.support();
    let width = hi - lo;
    let starts_mu = spread(lo, hi, restarts);

    match prior.sigma_prior {
        SigmaPrior::Fixed { sigma_l } => {
            let s = sigma_l.log10();
            let neg = |x: &[f64]| -(normal::log_pdf(x[0], prior.mu_prior.mean_log10, prior.mu_prior.std_log10)
                + obs.log_likelihood(x[0], s));
            let nm = NelderMead::new(1)
                .with_bounds(vec![(lo, hi)])
                .with_step(vec![(width / (2.0 * restarts as f64)).max(1e-6)])
                .with_tolerances(1e-11, 1e-13)
                .with_max_evals(600);
            let starts: Vec<Vec<f64>> = starts_mu.iter().map(|&x| vec![x]).collect();
            let best = nm.minimize_multistart(neg, &starts).expect("at least one start");
            if !best.value.is_finite() {
                return Err(Error::DegeneratePosterior(
                    "posterior is zero at every start point; the prior contradicts the series".into(),
                ));
            }
            Ok(MapEstimate { mu_hat: 10f64.powf(best.x[0]), sigma_hat: sigma_l, log_posterior_at_map: -best.value })
        }
        sp => {
            let (slo, shi) = sp.scatter_bounds();
            let (tlo, thi) = (slo.ln(), shi.ln());
            let t0 = sp.typical_scatter().ln().clamp(tlo, thi);
            let neg = |x: &[f64]| {
                let s = x[1].exp();
                -(prior.log_prior(x[0], s) + obs.log_likelihood(x[0], s))
            };
            let nm = NelderMead::new(2)
                .with_bounds(vec![(lo, hi), (tlo, thi)])
                .with_step(vec![(width / (2.0 * restarts as f64)).max(1e-6), 0.3])
                .with_tolerances(1e-10, 1e-12)
                .with_max_evals(2000);
            let starts: Vec<Vec<f64>> = starts_mu.iter().map(|&x| vec![x, t0]).collect();
            let best = nm.minimize_multistart(neg, &starts).expect("at least one start");
            if !best.value.is_finite() {
                return Err(Error::DegeneratePosterior(
                    "posterior is zero at every start point; the prior contradicts the series".into(),
                ));
            }
            Ok(MapEstimate {
                mu_hat: 10f64.powf(best.x[0]),
                sigma_hat: 10f64.powf(best.x[1].exp()),
                log_posterior_at_map: -best.value,
            })
        }
    }
}

/// Current-MAP acquisition: the next load is the MAP estimate of `mu`.
pub fn acquire_map(map: &MapEstimate) -> f64 {
    map.mu_hat
}

/// Rounding applied to a recommended load before it is tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    #[default]
    None,
    /// Nearest multiple of ten, ties upward, never below 10.
    #[serde(rename = "ten", alias = "minus_one")]
    MinusOne,
}

pub fn discretize_load(load: f64, factor: Discretization) -> f64 {
    match factor {
        Discretization::None => load,
        Discretization::MinusOne => ((load / 10.0 + 0.5).floor() * 10.0).max(10.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub n_points: usize,
    /// Continue with a flagged fallback grid instead of failing when the
    /// posterior has no finite value on the support.
    pub allow_degenerate: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { n_points: DEFAULT_GRID_POINTS, allow_degenerate: false }
    }
}

/// The log posterior evaluated on an equidistant `log10 mu` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorGrid {
    pub support_lo: f64,
    pub support_hi: f64,
    /// Scatter exponent `log10 sigma` the grid was evaluated at.
    pub scatter_log10: f64,
    /// Unshifted log posterior per grid point.
    log_values: Vec<f64>,
    max_log: f64,
    /// Set when the posterior vanished everywhere and a fallback was used.
    pub degenerate: bool,
}

impl PosteriorGrid {
    /// Builds a grid directly from log values (used for exports and tests).
    pub fn from_log_values(support_lo: f64, support_hi: f64, scatter_log10: f64, log_values: Vec<f64>) -> Result<Self> {
        if log_values.is_empty() || !(support_hi >= support_lo) {
            return Err(domain("grid needs at least one point and lo <= hi"));
        }
        let max_log = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max_log.is_finite() {
            return Err(Error::DegeneratePosterior("no grid point has a finite log posterior".into()));
        }
        Ok(Self { support_lo, support_hi, scatter_log10, log_values, max_log, degenerate: false })
    }

    pub fn n_points(&self) -> usize {
        self.log_values.len()
    }

    pub fn spacing(&self) -> f64 {
        if self.n_points() < 2 {
            0.0
        } else {
            (self.support_hi - self.support_lo) / (self.n_points() - 1) as f64
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_points() {
            self.support_hi
        } else {
            self.support_lo + i as f64 * self.spacing()
        }
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points()).map(move |i| self.x(i))
    }

    /// Log posterior values, unshifted.
    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    /// Log posterior values shifted so the maximum is 0.
    pub fn shifted(&self) -> impl Iterator<Item = f64> + '_ {
        self.log_values.iter().map(move |v| v - self.max_log)
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.xs().zip(self.log_values.iter().copied()).collect()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.log_values.iter().enumerate() {
            if v > self.log_values[best] {
                best = i;
            }
        }
        best
    }

    /// Probability mass per grid point (sums to one).
    pub fn masses(&self) -> Vec<f64> {
        let w: Vec<f64> = self.shifted().map(f64::exp).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    }

    /// Normalized density in `log10 mu` units.
    pub fn densities(&self) -> Vec<f64> {
        let dx = self.spacing();
        self.masses().into_iter().map(|m| if dx > 0.0 { m / dx } else { m }).collect()
    }

    /// Adds one observation's log-likelihood term to every grid point.
    pub fn observe(&mut self, load: f64, outcome: Outcome) -> Result<()> {
        check_load(load)?;
        let l = load.log10();
        let s = self.scatter_log10;
        let failed = outcome.is_failure();
        for i in 0..self.log_values.len() {
            let x = self.x(i);
            self.log_values[i] += term(l, failed, x, s);
        }
        self.max_log = self.log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !self.max_log.is_finite() {
            return Err(Error::DegeneratePosterior("observation left no finite grid point".into()));
        }
        Ok(())
    }

    /// CSV with header `mu_log10,posterior_density`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["mu_log10", "posterior_density"])?;
        for (x, d) in self.xs().zip(self.densities()) {
            w.write_record([x.to_string(), d.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// At most `max_points` `(mu_log10, density)` pairs. Each bucket of
    /// consecutive points is represented by its highest-density member, so
    /// the global argmax always survives.
    pub fn downsample(&self, max_points: usize) -> Vec<(f64, f64)> {
        let n = self.n_points();
        let dens = self.densities();
        if n <= max_points || max_points == 0 {
            return self.xs().zip(dens).collect();
        }
        let bucket = n.div_ceil(max_points);
        (0..n)
            .step_by(bucket)
            .map(|start| {
                let end = (start + bucket).min(n);
                let best = (start..end).fold(start, |b, i| if dens[i] > dens[b] { i } else { b });
                (self.x(best), dens[best])
            })
            .collect()
    }
}

/// Evaluates the posterior on `n_points` equidistant `log10 mu` values
/// spanning the prior mean +/- two prior standard deviations.
///
/// With a fixed scatter the grid uses that value; otherwise the scatter is
/// held at its joint MAP estimate.
pub fn evaluate_grid(prior: &PriorSpec, series: &ExperimentSeries, opts: GridOptions) -> Result<PosteriorGrid> {
    if opts.n_points < 3 {
        return Err(config(format!("grid needs at least 3 points, got {}", opts.n_points)));
    }
    prior.validate()?;
    let scatter = match prior.sigma_prior {
        SigmaPrior::Fixed { sigma_l } => sigma_l.log10(),
        _ => map_estimate(prior, series, DEFAULT_RESTARTS)?.scatter_log10(),
    };
    let (lo, hi) = prior.support();
    let obs = Observations::new(series);
    let n = opts.n_points;
    let dx = (hi - lo) / (n - 1) as f64;
    let mut log_values: Vec<f64> = (0..n)
        .map(|i| {
            let x = if i + 1 == n { hi } else { lo + i as f64 * dx };
            let mut v = normal::log_pdf(x, prior.mu_prior.mean_log10, prior.mu_prior.std_log10);
            for (&l, &f) in obs.log_loads.iter().zip(&obs.failures) {
                v += term(l, f, x, scatter);
            }
            v
        })
        .collect();
    let mut degenerate = false;
    let mut max_log = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max_log.is_finite() {
        if !opts.allow_degenerate {
            return Err(Error::DegeneratePosterior(
                "the posterior vanishes on the whole support; widen the prior".into(),
            ));
        }
        log::warn!("posterior vanishes on the support; continuing with the prior alone");
        degenerate = true;
        log_values = (0..n)
            .map(|i| normal::log_pdf(lo + i as f64 * dx, prior.mu_prior.mean_log10, prior.mu_prior.std_log10))
            .collect();
        max_log = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    Ok(PosteriorGrid { support_lo: lo, support_hi: hi, scatter_log10: scatter, log_values, max_log, degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorStd {
    pub mean_log10: f64,
    pub std_log10: f64,
    /// Standard deviation of `mu` itself, in N.
    pub std_load: f64,
}

/// Posterior mean and standard deviation by trapezoidal integration over the
/// grid.
pub fn posterior_std(grid: &PosteriorGrid) -> Result<PosteriorStd> {
    let n = grid.n_points();
    let finite = grid.log_values.iter().filter(|v| v.is_finite()).count();
    if finite == 0 {
        return Err(Error::DegeneratePosterior("grid has no finite point".into()));
    }
    let weights: Vec<f64> = grid
        .shifted()
        .enumerate()
        .map(|(i, v)| if n > 1 && (i == 0 || i + 1 == n) { 0.5 * v.exp() } else { v.exp() })
        .collect();
    let total: f64 = weights.iter().sum();
    let mean = grid.xs().zip(&weights).map(|(x, w)| x * w).sum::<f64>() / total;
    let var = grid.xs().zip(&weights).map(|(x, w)| (x - mean).powi(2) * w).sum::<f64>() / total;
    let mean_load = grid.xs().zip(&weights).map(|(x, w)| 10f64.powf(x) * w).sum::<f64>() / total;
    let var_load =
        grid.xs().zip(&weights).map(|(x, w)| (10f64.powf(x) - mean_load).powi(2) * w).sum::<f64>() / total;
    Ok(PosteriorStd { mean_log10: mean, std_log10: var.max(0.0).sqrt(), std_load: var_load.max(0.0).sqrt() })
}

/// How the entropy of each hypothetical posterior is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntropyEstimator {
    /// Draw `n_samples` grid points with probability proportional to the
    /// current posterior and form the importance-weighted estimate
    /// `H ~ -(1/n) sum_k w_k ln p_hyp(x_k)`, `w_k = p_hyp(x_k) / p_cur(x_k)`.
    Sampled { n_samples: usize, seed: u64 },
    /// `-sum_i p_i ln(p_i / dx)` over the full grid.
    ExactGrid,
}

/// Where candidate loads come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidateSearch {
    /// Multi-start simplex over `log10 l`, bounded to the grid support. The
    /// current MAP load is always one of the starts.
    Continuous { restarts: usize },
    /// Exhaustive scan over the grid points.
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyOptions {
    pub estimator: EntropyEstimator,
    pub search: CandidateSearch,
}

impl EntropyOptions {
    pub fn sampled(seed: u64) -> Self {
        Self {
            estimator: EntropyEstimator::Sampled { n_samples: DEFAULT_ENTROPY_SAMPLES, seed },
            search: CandidateSearch::Continuous { restarts: DEFAULT_RESTARTS },
        }
    }
}

/// Precomputed state for evaluating the entropy acquisition at many loads.
#[derive(Debug, Clone)]
pub struct EntropyAcquisition {
    /// Distinct sample locations (`log10 mu`).
    xs: Vec<f64>,
    /// `ln` of the current posterior mass at each location.
    log_mass: Vec<f64>,
    /// Sample multiplicity divided by the sample count.
    weight: Vec<f64>,
    /// Exact mode evaluates every point with unit multiplicity.
    exact: bool,
    log_dx: f64,
    scatter_log10: f64,
    map: MapEstimate,
    support: (f64, f64),
}

impl EntropyAcquisition {
    pub fn new(grid: &PosteriorGrid, map: &MapEstimate, estimator: EntropyEstimator) -> Result<Self> {
        if grid.n_points() < 2 {
            return Err(domain("entropy acquisition needs a grid with at least 2 points"));
        }
        let masses = grid.masses();
        let log_dx = grid.spacing().ln();
        let support = (grid.support_lo, grid.support_hi);
        let mk = |xs, log_mass, weight, exact| Self {
            xs,
            log_mass,
            weight,
            exact,
            log_dx,
            scatter_log10: grid.scatter_log10,
            map: *map,
            support,
        };
        match estimator {
            EntropyEstimator::ExactGrid => {
                let keep: Vec<usize> = (0..masses.len()).filter(|&i| masses[i] > 0.0).collect();
                let xs = keep.iter().map(|&i| grid.x(i)).collect();
                let log_mass: Vec<f64> = keep.iter().map(|&i| masses[i].ln()).collect();
                let weight = keep.iter().map(|&i| masses[i]).collect();
                Ok(mk(xs, log_mass, weight, true))
            }
            EntropyEstimator::Sampled { n_samples, seed } => {
                if n_samples == 0 {
                    return Err(config("n_samples must be positive"));
                }
                let mut cumulative = Vec::with_capacity(masses.len());
                let mut acc = 0.0;
                for &m in &masses {
                    acc += m;
                    cumulative.push(acc);
                }
                let mut counts = vec![0u32; masses.len()];
                let mut rng = StreamRng::new(seed);
                for _ in 0..n_samples {
                    let u = rng.uniform() * acc;
                    let i = cumulative.partition_point(|&c| c <= u).min(masses.len() - 1);
                    counts[i] += 1;
                }
                let keep: Vec<usize> = (0..masses.len()).filter(|&i| counts[i] > 0).collect();
                let xs = keep.iter().map(|&i| grid.x(i)).collect();
                let log_mass = keep.iter().map(|&i| masses[i].ln()).collect();
                let weight = keep.iter().map(|&i| counts[i] as f64 / n_samples as f64).collect();
                Ok(mk(xs, log_mass, weight, false))
            }
        }
    }

    /// Entropy of the current posterior under the same estimator.
    pub fn current_entropy(&self) -> f64 {
        -self.xs.iter().enumerate().map(|(k, _)| self.weight[k] * (self.log_mass[k] - self.log_dx)).sum::<f64>()
    }

    /// Entropy of the posterior after observing `outcome` at `10^load_log10`,
    /// or `None` if that branch has no mass.
    pub fn branch_entropy(&self, load_log10: f64, failed: bool) -> Option<f64> {
        let ll: Vec<f64> = self.xs.iter().map(|&x| term(load_log10, failed, x, self.scatter_log10)).collect();
        // ln Z = ln sum_k weight_k exp(ll_k)
        let m = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return None;
        }
        let z: f64 = ll.iter().zip(&self.weight).map(|(l, w)| w * (l - m).exp()).sum();
        let log_z = m + z.ln();
        let mut h = 0.0;
        for k in 0..self.xs.len() {
            let log_ratio = ll[k] - log_z;
            let log_p = self.log_mass[k] + log_ratio - self.log_dx;
            h -= self.weight[k] * log_ratio.exp() * log_p;
        }
        debug_assert!(self.exact || h.is_finite());
        Some(h)
    }

    /// Acquisition value at `10^load_log10`: the negative posterior entropies
    /// of both outcomes weighted by the MAP failure probability.
    pub fn value(&self, load_log10: f64) -> Result<f64> {
        let p_fail = normal::cdf(z_score(load_log10, self.map.mu_log10(), self.map.scatter_log10()));
        let hf = self.branch_entropy(load_log10, true);
        let hr = self.branch_entropy(load_log10, false);
        match (hf, hr) {
            (None, None) => Err(Error::DegeneratePosterior(format!(
                "both hypothetical posteriors vanish at load {}",
                10f64.powf(load_log10)
            ))),
            (Some(hf), None) => Ok(-hf * p_fail),
            (None, Some(hr)) => Ok(-hr * (1.0 - p_fail)),
            (Some(hf), Some(hr)) => Ok(-hf * p_fail - hr * (1.0 - p_fail)),
        }
    }

    /// Maximizes [`value`](Self::value); returns `(load, value)`.
    pub fn maximize(&self, grid: &PosteriorGrid, search: CandidateSearch) -> Result<(f64, f64)> {
        let (lo, hi) = self.support;
        match search {
            CandidateSearch::Discrete => {
                let mut best: Option<(f64, f64)> = None;
                for x in grid.xs() {
                    let v = self.value(x)?;
                    if best.map_or(true, |(_, bv)| v > bv) {
                        best = Some((x, v));
                    }
                }
                let (x, v) = best.expect("grid has points");
                Ok((10f64.powf(x), v))
            }
            CandidateSearch::Continuous { restarts } => {
                if restarts == 0 {
                    return Err(config("restarts must be at least 1"));
                }
                let mut starts: Vec<Vec<f64>> = spread(lo, hi, restarts).into_iter().map(|x| vec![x]).collect();
                starts.push(vec![self.map.mu_log10().clamp(lo, hi)]);
                let step = (self.map.scatter_log10() * 2.0).min((hi - lo) / 4.0).max(1e-9);
                let nm = NelderMead::new(1)
                    .with_bounds(vec![(lo, hi)])
                    .with_step(vec![step])
                    .with_tolerances(1e-6, 1e-9)
                    .with_max_evals(80);
                let mut failure = None;
                let best = nm
                    .minimize_multistart(
                        |x| match self.value(x[0]) {
                            Ok(v) => -v,
                            Err(e) => {
                                failure.get_or_insert(e);
                                f64::INFINITY
                            }
                        },
                        &starts,
                    )
                    .expect("at least one start");
                if !best.value.is_finite() {
                    return Err(failure.unwrap_or_else(|| {
                        Error::DegeneratePosterior("entropy acquisition is undefined everywhere".into())
                    }));
                }
                Ok((10f64.powf(best.x[0]), -best.value))
            }
        }
    }
}

/// Probability-weighted entropy acquisition: the load whose outcome is
/// expected to leave the most concentrated posterior.
pub fn acquire_entropy(
    prior: &PriorSpec,
    series: &ExperimentSeries,
    map: &MapEstimate,
    grid_opts: GridOptions,
    opts: EntropyOptions,
) -> Result<f64> {
    let grid = evaluate_grid(prior, series, grid_opts)?;
    acquire_entropy_on_grid(&grid, map, opts)
}

/// [`acquire_entropy`] on an already evaluated grid.
pub fn acquire_entropy_on_grid(grid: &PosteriorGrid, map: &MapEstimate, opts: EntropyOptions) -> Result<f64> {
    let acq = EntropyAcquisition::new(grid, map, opts.estimator)?;
    Ok(acq.maximize(grid, opts.search)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MaterialParams, Outcome::*};
    use crate::simulator::SimulatorState;

    const SCATTER: f64 = 0.03;

    fn sigma() -> f64 {
        10f64.powf(SCATTER)
    }

    fn prior(mean_load: f64, std_log10: f64) -> PriorSpec {
        PriorSpec::fixed(mean_load.log10(), std_log10, sigma()).unwrap()
    }

    fn grid_of(p: &PriorSpec, s: &ExperimentSeries, n: usize) -> PosteriorGrid {
        evaluate_grid(p, s, GridOptions { n_points: n, allow_degenerate: false }).unwrap()
    }

    /// Truncated normal on +/- 2 std: std factor sqrt(1 - 2*2*phi(2)/(Phi(2)-Phi(-2))).
    fn truncated_factor() -> f64 {
        let a = 2.0;
        (1.0 - 2.0 * a * normal::pdf(a) / (normal::cdf(a) - normal::cdf(-a))).sqrt()
    }

    #[test]
    fn width_scales() {
        assert!((prior_std_log10(400.0, 10.0, WidthScale::Log10Exponent).unwrap() - 1.0).abs() < 1e-15);
        // Small widths: std_log10 ~ width / (mean ln 10).
        let s = prior_std_log10(400.0, 10.0, WidthScale::Load).unwrap();
        assert!((s - 10.0 / 400.0 / std::f64::consts::LN_10).abs() < 1e-5, "{s}");
        // Check the defining identity for a wide prior.
        let s = prior_std_log10(400.0, 1e10, WidthScale::Load).unwrap();
        let v = (s * std::f64::consts::LN_10).powi(2);
        let sd = 400.0 * (v.exp() * (v.exp() - 1.0)).sqrt();
        assert!((sd / 1e10 - 1.0).abs() < 1e-9);
        assert!(prior_std_log10(400.0, 0.0, WidthScale::Load).is_err());
        assert!(prior_std_log10(400.0, 1.0, WidthScale::Log10Exponent).is_err());
    }

    #[test]
    fn log_posterior_empty_series_is_prior() {
        let p = prior(400.0, 1.0);
        let v = log_posterior(&p, &ExperimentSeries::default(), 500.0, sigma()).unwrap();
        assert!((v - normal::log_pdf(500f64.log10(), 400f64.log10(), 1.0)).abs() < 1e-14);
        // A scatter other than the fixed one has zero prior density.
        let off = log_posterior(&p, &ExperimentSeries::default(), 500.0, 1.2).unwrap();
        assert_eq!(off, f64::NEG_INFINITY);
        assert!(log_posterior(&p, &ExperimentSeries::default(), -1.0, sigma()).is_err());
        assert!(log_posterior(&p, &ExperimentSeries::default(), 400.0, 0.9).is_err());
    }

    #[test]
    fn flat_prior_ratio_is_likelihood_ratio() {
        let p = prior(400.0, 10.0);
        let s = ExperimentSeries::from_pairs([(420.0, Failure)]).unwrap();
        let (a, b) = (390.0, 450.0);
        let ratio = (log_posterior(&p, &s, a, sigma()).unwrap() - log_posterior(&p, &s, b, sigma()).unwrap()).exp();
        let pa = normal::cdf((420f64.log10() - a.log10()) / SCATTER);
        let pb = normal::cdf((420f64.log10() - b.log10()) / SCATTER);
        let prior_ratio = (normal::log_pdf(a.log10(), 400f64.log10(), 10.0)
            - normal::log_pdf(b.log10(), 400f64.log10(), 10.0))
        .exp();
        assert!((ratio / prior_ratio - pa / pb).abs() < 1e-6 * (pa / pb));
    }

    #[test]
    fn empty_series_grid_peaks_in_the_middle() {
        let g = grid_of(&prior(400.0, 1.0), &ExperimentSeries::default(), 3);
        assert_eq!(g.n_points(), 3);
        assert_eq!(g.argmax(), 1);
        let g = grid_of(&prior(400.0, 0.3), &ExperimentSeries::default(), 10_001);
        assert_eq!(g.argmax(), 5000);
        assert!((g.x(5000) - 400f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn grid_spacing_matches_definition() {
        let p = prior(400.0, 0.5);
        let g = grid_of(&p, &ExperimentSeries::default(), DEFAULT_GRID_POINTS);
        assert!((g.spacing() - 4.0 * 0.5 / (DEFAULT_GRID_POINTS - 1) as f64).abs() < 1e-15);
        assert!(evaluate_grid(&p, &ExperimentSeries::default(), GridOptions { n_points: 2, allow_degenerate: false })
            .is_err());
    }

    #[test]
    fn failure_at_prior_mean_shifts_argmax_down() {
        let p = prior(400.0, 0.1);
        let s = ExperimentSeries::from_pairs([(400.0, Failure)]).unwrap();
        let g = grid_of(&p, &s, 1001);
        assert!(g.argmax() < 500);
        let s = ExperimentSeries::from_pairs([(400.0, Runout)]).unwrap();
        assert!(grid_of(&p, &s, 1001).argmax() > 500);
    }

    #[test]
    fn incremental_observation_matches_full_evaluation() {
        let p = prior(380.0, 0.2);
        let s = ExperimentSeries::from_pairs([(400.0, Failure), (370.0, Runout), (390.0, Failure)]).unwrap();
        let mut g = grid_of(&p, &ExperimentSeries::default(), 2001);
        for r in s.iter() {
            g.observe(r.load, r.outcome).unwrap();
        }
        let full = grid_of(&p, &s, 2001);
        assert_eq!(g.log_values(), full.log_values());
    }

    #[test]
    fn posterior_std_of_prior_is_truncated_normal() {
        let p = prior(400.0, 0.7);
        let g = grid_of(&p, &ExperimentSeries::default(), 10_001);
        let st = posterior_std(&g).unwrap();
        let want = truncated_factor() * 0.7;
        assert!((truncated_factor() - 0.8796).abs() < 5e-5);
        assert!((st.std_log10 / want - 1.0).abs() < 0.01, "{} vs {}", st.std_log10, want);
        assert!((st.mean_log10 - 400f64.log10()).abs() < 1e-10);
    }

    #[test]
    fn posterior_std_single_point_and_shift_invariance() {
        let mut v = vec![f64::NEG_INFINITY; 11];
        v[4] = -3.0;
        let g = PosteriorGrid::from_log_values(0.0, 1.0, SCATTER, v).unwrap();
        assert_eq!(posterior_std(&g).unwrap().std_log10, 0.0);

        let vals: Vec<f64> = (0..101).map(|i| -((i as f64 - 40.0) / 9.0).powi(2) + (i as f64 * 0.1).sin()).collect();
        let a = PosteriorGrid::from_log_values(2.0, 3.0, SCATTER, vals.clone()).unwrap();
        let b = PosteriorGrid::from_log_values(2.0, 3.0, SCATTER, vals.iter().map(|v| v + 123.456).collect()).unwrap();
        let (sa, sb) = (posterior_std(&a).unwrap(), posterior_std(&b).unwrap());
        assert!((sa.std_log10 - sb.std_log10).abs() < 1e-12);
        assert!(PosteriorGrid::from_log_values(0.0, 1.0, SCATTER, vec![f64::NEG_INFINITY; 4]).is_err());
    }

    #[test]
    fn map_of_empty_series_is_prior_mode() {
        let p = prior(400.0, 1.0);
        let m = map_estimate(&p, &ExperimentSeries::default(), 8).unwrap();
        assert!((m.mu_hat / 400.0 - 1.0).abs() < 1e-6, "{}", m.mu_hat);
        assert_eq!(m.sigma_hat, sigma());
        assert_eq!(acquire_map(&m), m.mu_hat);
        assert!(map_estimate(&p, &ExperimentSeries::default(), 0).is_err());
    }

    #[test]
    fn map_dominates_grid() {
        let p = prior(420.0, 0.2);
        let s = ExperimentSeries::from_pairs([(400.0, Failure), (380.0, Runout), (395.0, Runout)]).unwrap();
        let m = map_estimate(&p, &s, 8).unwrap();
        let g = grid_of(&p, &s, 10_001);
        let gmax = g.log_values()[g.argmax()];
        assert!(m.log_posterior_at_map >= gmax - 1e-9);
    }

    #[test]
    fn map_converges_with_simulated_data() {
        let truth = MaterialParams::new(400.0, sigma()).unwrap();
        let p = PriorSpec::from_width(400.0, 10.0, WidthScale::Load, SigmaPrior::Fixed { sigma_l: sigma() }).unwrap();
        let mut sim = SimulatorState::new(truth, 21);
        let mut s = ExperimentSeries::default();
        let mut m = map_estimate(&p, &s, 8).unwrap();
        for _ in 0..20 {
            let l = acquire_map(&m);
            let o = sim.step(l).unwrap();
            s.push(l, o).unwrap();
            m = map_estimate(&p, &s, 8).unwrap();
        }
        // Dense oracle grid.
        let oracle = grid_of(&p, &s, 1_000_001);
        let x_oracle = oracle.x(oracle.argmax());
        assert!((m.mu_log10() - x_oracle).abs() <= oracle.spacing());
        assert!((m.mu_hat - 400.0).abs() < 15.0, "{}", m.mu_hat);
    }

    #[test]
    fn tight_overestimated_prior_stays_high() {
        // Width 10^0.1 N around 700 N.
        let p = PriorSpec::from_width(700.0, 10f64.powf(0.1), WidthScale::Load, SigmaPrior::Fixed { sigma_l: sigma() })
            .unwrap();
        let truth = MaterialParams::new(400.0, sigma()).unwrap();
        let mut sim = SimulatorState::new(truth, 2);
        let mut s = ExperimentSeries::default();
        let mut m = map_estimate(&p, &s, 8).unwrap();
        for _ in 0..20 {
            let l = acquire_map(&m);
            s.push(l, sim.step(l).unwrap()).unwrap();
            m = map_estimate(&p, &s, 8).unwrap();
        }
        assert!((m.mu_hat - 700.0).abs() < 10.0, "{}", m.mu_hat);
    }

    #[test]
    fn distributional_scatter_prior() {
        let p = PriorSpec::new(
            PredictiveNormal::new(400f64.log10(), 0.2).unwrap(),
            SigmaPrior::Gamma { shape: 9.0, rate: 300.0 },
        )
        .unwrap();
        let truth = MaterialParams::new(400.0, sigma()).unwrap();
        let mut sim = SimulatorState::new(truth, 4);
        let mut s = ExperimentSeries::default();
        for i in 0..40 {
            let l = 340.0 + 3.0 * i as f64;
            s.push(l, sim.step(l).unwrap()).unwrap();
        }
        let m = map_estimate(&p, &s, 8).unwrap();
        assert!(m.sigma_hat > 1.0);
        assert!((m.mu_hat - 400.0).abs() < 30.0, "{m:?}");
        let g = evaluate_grid(&p, &s, GridOptions { n_points: 1001, allow_degenerate: false }).unwrap();
        assert!((g.scatter_log10 - m.scatter_log10()).abs() < 1e-12);
        let lp = log_posterior(&p, &s, m.mu_hat, m.sigma_hat).unwrap();
        assert!((lp - m.log_posterior_at_map).abs() < 1e-9);

        let u = PriorSpec::new(
            PredictiveNormal::new(400f64.log10(), 0.2).unwrap(),
            SigmaPrior::PositiveUniform { lo_log10: 0.01, hi_log10: 0.1 },
        )
        .unwrap();
        let m = map_estimate(&u, &s, 4).unwrap();
        assert!((0.01..=0.1).contains(&m.scatter_log10()));
        assert!(SigmaPrior::Gamma { shape: -1.0, rate: 1.0 }.validate().is_err());
        assert!(PriorSpec::fixed(2.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn discretization_rule() {
        assert_eq!(discretize_load(404.9, Discretization::MinusOne), 400.0);
        assert_eq!(discretize_load(405.0, Discretization::MinusOne), 410.0);
        assert_eq!(discretize_load(404.9, Discretization::None), 404.9);
        assert_eq!(discretize_load(2.0, Discretization::MinusOne), 10.0);
    }

    #[test]
    fn downsample_keeps_argmax() {
        let p = prior(400.0, 0.3);
        let s = ExperimentSeries::from_pairs([(390.0, Failure), (385.0, Runout)]).unwrap();
        let g = grid_of(&p, &s, 10_001);
        let ds = g.downsample(1000);
        assert!(ds.len() <= 1000);
        let xmax = g.x(g.argmax());
        assert!(ds.iter().any(|&(x, _)| x == xmax));
    }

    #[test]
    fn grid_csv_has_header_and_rows() {
        let g = grid_of(&prior(400.0, 0.3), &ExperimentSeries::default(), 5);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("mu_log10,posterior_density\n"));
        assert_eq!(text.lines().count(), 6);
    }

    fn converged_case(seed: u64) -> (PriorSpec, ExperimentSeries, MapEstimate) {
        let truth = MaterialParams::new(400.0, sigma()).unwrap();
        let p = prior(400.0, 0.1);
        let mut sim = SimulatorState::new(truth, seed);
        let mut s = ExperimentSeries::default();
        let mut m = map_estimate(&p, &s, 8).unwrap();
        for _ in 0..20 {
            let l = acquire_map(&m);
            s.push(l, sim.step(l).unwrap()).unwrap();
            m = map_estimate(&p, &s, 8).unwrap();
        }
        (p, s, m)
    }

    #[test]
    fn importance_estimator_tracks_exact_entropy() {
        let (p, s, m) = converged_case(3);
        let g = grid_of(&p, &s, 10_001);
        let exact = EntropyAcquisition::new(&g, &m, EntropyEstimator::ExactGrid).unwrap();
        let sampled =
            EntropyAcquisition::new(&g, &m, EntropyEstimator::Sampled { n_samples: 10_000, seed: 1 }).unwrap();
        for load in [380.0f64, 400.0, 420.0] {
            let a = exact.branch_entropy(load.log10(), true).unwrap();
            let b = sampled.branch_entropy(load.log10(), true).unwrap();
            assert!((a - b).abs() < 0.05, "{load}: {a} vs {b}");
        }
        // Learning something never increases expected entropy much.
        let h0 = exact.current_entropy();
        let pf = m.failure_probability(400.0);
        let expected = pf * exact.branch_entropy(400f64.log10(), true).unwrap()
            + (1.0 - pf) * exact.branch_entropy(400f64.log10(), false).unwrap();
        assert!(expected < h0 + 1e-3);
    }

    #[test]
    fn extreme_load_is_less_informative_than_map() {
        let (p, s, m) = converged_case(5);
        // Exact-grid oracle on a dense grid.
        let g = grid_of(&p, &s, 1_000_001);
        let acq = EntropyAcquisition::new(&g, &m, EntropyEstimator::ExactGrid).unwrap();
        let at_map = acq.value(m.mu_log10()).unwrap();
        let far = acq.value(9.0).unwrap();
        assert!(far <= at_map, "{far} > {at_map}");
    }

    #[test]
    fn entropy_load_approaches_map_after_consistent_data() {
        for seed in [1, 2, 3] {
            let (p, s, m) = converged_case(seed);
            let g = grid_of(&p, &s, 10_001);
            let l = acquire_entropy_on_grid(&g, &m, EntropyOptions::sampled(seed)).unwrap();
            assert!(((l - m.mu_hat) / m.mu_hat).abs() < 0.1, "{l} vs {}", m.mu_hat);
        }
    }

    #[test]
    fn continuous_search_matches_exhaustive_scan() {
        let (p, s, m) = converged_case(8);
        let g = grid_of(&p, &s, 2001);
        let acq = EntropyAcquisition::new(&g, &m, EntropyEstimator::ExactGrid).unwrap();
        let (ld, vd) = acq.maximize(&g, CandidateSearch::Discrete).unwrap();
        // Brute-force scan in the test.
        let mut best = (0.0, f64::NEG_INFINITY);
        for x in g.xs() {
            let v = acq.value(x).unwrap();
            if v > best.1 {
                best = (x, v);
            }
        }
        assert_eq!(ld, 10f64.powf(best.0));
        let (lc, vc) = acq.maximize(&g, CandidateSearch::Continuous { restarts: 8 }).unwrap();
        assert!(vc >= vd - 1e-6, "{vc} < {vd}");
        assert!((lc.log10() - ld.log10()).abs() < 3.0 * g.spacing() + 1e-3);
    }

    #[test]
    fn entropy_acquisition_is_symmetric_in_log_load() {
        // Symmetric posterior: prior only, centred at 400.
        let p = prior(400.0, 0.05);
        let s = ExperimentSeries::default();
        let g = grid_of(&p, &s, 10_001);
        let m = map_estimate(&p, &s, 8).unwrap();
        let c = 1.05f64;
        let reps = 30;
        let diffs: Vec<f64> = (0..reps)
            .map(|seed| {
                let acq =
                    EntropyAcquisition::new(&g, &m, EntropyEstimator::Sampled { n_samples: 10_000, seed }).unwrap();
                acq.value((400.0 * c).log10()).unwrap() - acq.value((400.0 / c).log10()).unwrap()
            })
            .collect();
        let mean = diffs.iter().sum::<f64>() / reps as f64;
        let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
        // The per-replicate difference is within 3 sd of zero on average.
        assert!(mean.abs() < 3.0 * sd.max(1e-12) / (reps as f64).sqrt() + 1e-12 || mean.abs() < 1e-3, "{mean} {sd}");
        let exact = EntropyAcquisition::new(&g, &m, EntropyEstimator::ExactGrid).unwrap();
        let d = exact.value((400.0 * c).log10()).unwrap() - exact.value((400.0 / c).log10()).unwrap();
        assert!(d.abs() < 1e-6, "{d}");
    }
}
