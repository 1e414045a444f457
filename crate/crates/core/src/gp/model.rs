//! Exact GP regression with a zero prior mean on standardized targets.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::data::{FeatureEncoder, MaterialFeatures, TrainingRow};
use super::kernel::{eval_unchecked, gram, KernelHyperparams, KernelKind};
use super::PredictiveNormal;
use crate::error::{config, domain, Error, Result};
use crate::optim::NelderMead;
use crate::rng::StreamRng;

/// Mean/std standardization of the log10 targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub std: f64,
}

impl Standardizer {
    pub fn fit(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: if var > 0.0 { var.sqrt() } else { 1.0 } }
    }

    pub fn encode(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn decode(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

fn factorize(kind: KernelKind, hp: &KernelHyperparams, xs: &[Vec<f64>]) -> Option<Cholesky<f64, Dyn>> {
    let mut k = gram(kind, hp, xs);
    let noise = hp.effective_noise();
    for i in 0..xs.len() {
        k[(i, i)] += noise;
    }
    Cholesky::new(k)
}

fn lml_from(chol: &Cholesky<f64, Dyn>, y: &DVector<f64>) -> f64 {
    let alpha = chol.solve(y);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    -0.5 * y.dot(&alpha) - log_det - 0.5 * y.len() as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Exact log marginal likelihood, `None` when the covariance is not positive
/// definite.
pub fn log_marginal_likelihood(kind: KernelKind, hp: &KernelHyperparams, xs: &[Vec<f64>], y: &[f64]) -> Option<f64> {
    let chol = factorize(kind, hp, xs)?;
    Some(lml_from(&chol, &DVector::from_column_slice(y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_evals_per_start: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { restarts: 8, seed: 0, max_evals_per_start: 1500 }
    }
}

/// Maximizes the log marginal likelihood over log-transformed hyperparameters.
///
/// The first start is `init`; the others are Gaussian perturbations of it in
/// log space. The winner is polished by restarting the simplex until it stops
/// improving.
pub fn fit_hyperparams(
    kind: KernelKind,
    xs: &[Vec<f64>],
    y: &[f64],
    init: &KernelHyperparams,
    opts: FitOptions,
) -> Result<KernelHyperparams> {
    if xs.len() < 2 || xs.len() != y.len() {
        return Err(config(format!("need at least 2 matching inputs and targets, got {} and {}", xs.len(), y.len())));
    }
    if xs.iter().any(|x| x.len() != init.dim()) {
        return Err(domain("input dimension does not match the linear weights"));
    }
    init.validate()?;
    let restarts = opts.restarts.max(1);
    let bounds = init.theta_bounds(kind);
    let t0: Vec<f64> = init.to_theta(kind).iter().zip(&bounds).map(|(t, (lo, hi))| t.clamp(*lo, *hi)).collect();
    let yv = DVector::from_column_slice(y);
    let objective = |t: &[f64]| {
        let hp = KernelHyperparams::from_theta(t, kind, init);
        match factorize(kind, &hp, xs) {
            Some(c) => -lml_from(&c, &yv),
            None => f64::INFINITY,
        }
    };

    let mut rng = StreamRng::new(opts.seed);
    let mut starts = vec![t0.clone()];
    for _ in 1..restarts {
        starts.push(
            t0.iter()
                .zip(&bounds)
                .map(|(t, (lo, hi))| {
                    let e: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
                    (t + e).clamp(*lo, *hi)
                })
                .collect(),
        );
    }
    let nm = NelderMead::new(t0.len())
        .with_step(vec![0.5; t0.len()])
        .with_bounds(bounds)
        .with_tolerances(1e-7, 1e-10)
        .with_max_evals(opts.max_evals_per_start);
    let mut best = nm
        .minimize_multistart(objective, &starts)
        .filter(|m| m.value.is_finite())
        .ok_or_else(|| Error::Numerical("covariance matrix is not positive definite at any start".into()))?;
    let polish = nm.clone().with_step(vec![0.05; t0.len()]);
    for _ in 0..20 {
        let m = polish.minimize(objective, &best.x);
        let gain = best.value - m.value;
        if m.value < best.value {
            best = m;
        }
        if gain < 1e-10 {
            break;
        }
    }
    Ok(KernelHyperparams::from_theta(&best.x, kind, init))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GpModelData {
    kind: KernelKind,
    hyperparams: KernelHyperparams,
    encoder: FeatureEncoder,
    train_inputs: Vec<Vec<f64>>,
    train_targets: Vec<f64>,
    target_mean: f64,
    target_std: f64,
}

/// A trained GP over encoded material features predicting log10 of the mean
/// fatigue strength.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "GpModelData", try_from = "GpModelData")]
pub struct GpModel {
    kind: KernelKind,
    hyperparams: KernelHyperparams,
    encoder: FeatureEncoder,
    train_inputs: Vec<Vec<f64>>,
    train_targets: Vec<f64>,
    standardizer: Standardizer,
    chol: Cholesky<f64, Dyn>,
    weights: DVector<f64>,
}

impl From<GpModel> for GpModelData {
    fn from(m: GpModel) -> Self {
        Self {
            kind: m.kind,
            hyperparams: m.hyperparams,
            encoder: m.encoder,
            train_inputs: m.train_inputs,
            train_targets: m.train_targets,
            target_mean: m.standardizer.mean,
            target_std: m.standardizer.std,
        }
    }
}

impl TryFrom<GpModelData> for GpModel {
    type Error = Error;
    fn try_from(d: GpModelData) -> Result<Self> {
        if !(d.target_std > 0.0 && d.target_std.is_finite() && d.target_mean.is_finite()) {
            return Err(domain("invalid target standardization"));
        }
        Self::assemble(
            d.kind,
            d.hyperparams,
            d.encoder,
            d.train_inputs,
            d.train_targets,
            Standardizer { mean: d.target_mean, std: d.target_std },
        )
    }
}

impl GpModel {
    fn assemble(
        kind: KernelKind,
        hyperparams: KernelHyperparams,
        encoder: FeatureEncoder,
        train_inputs: Vec<Vec<f64>>,
        train_targets: Vec<f64>,
        standardizer: Standardizer,
    ) -> Result<Self> {
        hyperparams.validate()?;
        if train_inputs.is_empty() || train_inputs.len() != train_targets.len() {
            return Err(domain("training inputs and targets must be non-empty and of equal length"));
        }
        if train_inputs.iter().any(|x| x.len() != hyperparams.dim()) {
            return Err(domain("input dimension does not match the linear weights"));
        }
        let chol = factorize(kind, &hyperparams, &train_inputs)
            .ok_or_else(|| Error::Numerical("covariance matrix is not positive definite".into()))?;
        let weights = chol.solve(&DVector::from_column_slice(&train_targets));
        Ok(Self { kind, hyperparams, encoder, train_inputs, train_targets, standardizer, chol, weights })
    }

    /// Builds a model with given hyperparameters, without fitting.
    pub fn with_hyperparams(rows: &[TrainingRow], kind: KernelKind, hyperparams: KernelHyperparams) -> Result<Self> {
        let feats: Vec<MaterialFeatures> = rows.iter().map(|r| r.features).collect();
        let encoder = FeatureEncoder::fit(&feats);
        let logs: Vec<f64> = rows.iter().map(|r| r.mu_l.log10()).collect();
        let standardizer = Standardizer::fit(&logs);
        let xs = feats.iter().map(|f| encoder.encode(f)).collect();
        let ys = logs.iter().map(|v| standardizer.encode(*v)).collect();
        Self::assemble(kind, hyperparams, encoder, xs, ys, standardizer)
    }

    /// Fits encoder, standardization and hyperparameters to `rows`.
    pub fn train(rows: &[TrainingRow], kind: KernelKind, opts: FitOptions) -> Result<Self> {
        let init = KernelHyperparams::default_for(super::data::ENCODED_DIM);
        let start = Self::with_hyperparams(rows, kind, init.clone()).or_else(|_| {
            // The default start can be singular for degenerate inputs; more noise fixes that.
            Self::with_hyperparams(rows, kind, KernelHyperparams { noise: 1.0, ..init })
        })?;
        let hp = fit_hyperparams(kind, &start.train_inputs, &start.train_targets, &start.hyperparams, opts)?;
        Self::assemble(kind, hp, start.encoder, start.train_inputs, start.train_targets, start.standardizer)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn hyperparams(&self) -> &KernelHyperparams {
        &self.hyperparams
    }

    pub fn standardizer(&self) -> Standardizer {
        self.standardizer
    }

    pub fn encoder(&self) -> &FeatureEncoder {
        &self.encoder
    }

    pub fn train_inputs(&self) -> &[Vec<f64>] {
        &self.train_inputs
    }

    pub fn train_targets(&self) -> &[f64] {
        &self.train_targets
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        lml_from(&self.chol, &DVector::from_column_slice(&self.train_targets))
    }

    /// Latent posterior mean and variance in standardized units.
    pub fn predict_encoded(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.hyperparams.dim() {
            return Err(domain(format!("expected {} input dimensions, got {}", self.hyperparams.dim(), x.len())));
        }
        let kstar = DVector::from_iterator(
            self.train_inputs.len(),
            self.train_inputs.iter().map(|t| eval_unchecked(self.kind, &self.hyperparams, x, t)),
        );
        let mean = kstar.dot(&self.weights);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&kstar)
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        let var = eval_unchecked(self.kind, &self.hyperparams, x, x) - v.dot(&v);
        Ok((mean, var.max(0.0)))
    }

    /// Predictive distribution of log10 mu_L for a new material. The variance
    /// is that of the latent function, so observation noise is excluded.
    pub fn predict(&self, features: &MaterialFeatures) -> Result<PredictiveNormal> {
        let (m, v) = self.predict_encoded(&self.encoder.encode(features))?;
        self.to_predictive(m, v)
    }

    /// Like [`GpModel::predict`] but with the observation noise added.
    pub fn predict_observed(&self, features: &MaterialFeatures) -> Result<PredictiveNormal> {
        let (m, v) = self.predict_encoded(&self.encoder.encode(features))?;
        self.to_predictive(m, v + self.hyperparams.effective_noise())
    }

    fn to_predictive(&self, mean: f64, var: f64) -> Result<PredictiveNormal> {
        let std = (var.sqrt() * self.standardizer.std).max(f64::MIN_POSITIVE);
        PredictiveNormal::new(self.standardizer.decode(mean), std)
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

/// Dense Gram plus noise, exposed for diagnostics.
pub fn noisy_gram(kind: KernelKind, hp: &KernelHyperparams, xs: &[Vec<f64>]) -> DMatrix<f64> {
    let mut k = gram(kind, hp, xs);
    for i in 0..xs.len() {
        k[(i, i)] += hp.effective_noise();
    }
    k
}
