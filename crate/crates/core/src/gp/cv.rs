//! Train/test splitting, k-fold cross-validation and kernel selection.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::TrainingRow;
use super::kernel::{KernelHyperparams, KernelKind};
use super::model::{FitOptions, GpModel};
use crate::error::{config, Result};
use crate::rng::{derive_seed, stream, StreamRng};

/// Coefficient of determination. Zero-variance targets give 0.
pub fn r_squared(truth: &[f64], pred: &[f64]) -> f64 {
    let n = truth.len() as f64;
    let mean = truth.iter().sum::<f64>() / n;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    if !(ss_tot > 0.0) {
        return 0.0;
    }
    let ss_res: f64 = truth.iter().zip(pred).map(|(t, p)| (t - p).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut StreamRng::derived(seed, &[stream::SPLIT]));
    idx
}

/// Seeded shuffle followed by a cut; returns `(train, test)`.
pub fn train_test_split(rows: &[TrainingRow], test_fraction: f64, seed: u64) -> Result<(Vec<TrainingRow>, Vec<TrainingRow>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(config(format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    let n_test = ((rows.len() as f64) * test_fraction).round() as usize;
    if n_test == 0 || n_test >= rows.len() {
        return Err(config(format!("cannot split {} rows with test fraction {test_fraction}", rows.len())));
    }
    let idx = permutation(rows.len(), seed);
    let test = idx[..n_test].iter().map(|&i| rows[i]).collect();
    let train = idx[n_test..].iter().map(|&i| rows[i]).collect();
    Ok((train, test))
}

/// Fold index of every row: a seeded permutation dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 || folds > n {
        return Err(config(format!("need 2 <= folds <= {n}, got {folds}")));
    }
    let mut out = vec![0; n];
    for (pos, &i) in permutation(n, derive_seed(seed, &[folds as u64])).iter().enumerate() {
        out[i] = pos % folds;
    }
    Ok(out)
}

/// Held-out R² of a model on rows in log10 space.
pub fn evaluate_r2(model: &GpModel, rows: &[TrainingRow]) -> Result<f64> {
    let truth: Vec<f64> = rows.iter().map(|r| r.mu_l.log10()).collect();
    let pred = rows.iter().map(|r| Ok(model.predict(&r.features)?.mean_log10)).collect::<Result<Vec<_>>>()?;
    Ok(r_squared(&truth, &pred))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub kernel: KernelKind,
    pub fold: usize,
    pub r2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub scores: Vec<FoldScore>,
    pub mean_r2: Vec<(KernelKind, f64)>,
    pub best_kernel: KernelKind,
    /// Hyperparameters of the best kernel refitted on all rows.
    pub best_hyperparams: KernelHyperparams,
}

#[derive(Debug, Clone, Copy)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    pub fit: FitOptions,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self { folds: 10, seed: 0, fit: FitOptions::default() }
    }
}

/// Scores every kernel on every fold, picks the best mean R² and refits it
/// on all rows. Folds are evaluated in parallel.
pub fn cross_validate(rows: &[TrainingRow], kernels: &[KernelKind], opts: CvOptions) -> Result<CvReport> {
    if kernels.is_empty() {
        return Err(config("kernel menu is empty"));
    }
    let assign = fold_assignment(rows.len(), opts.folds, opts.seed)?;
    let jobs: Vec<(KernelKind, usize)> = kernels.iter().flat_map(|&k| (0..opts.folds).map(move |f| (k, f))).collect();
    let scores = jobs
        .par_iter()
        .map(|&(kernel, fold)| {
            let train: Vec<TrainingRow> = rows.iter().zip(&assign).filter(|(_, &a)| a != fold).map(|(r, _)| *r).collect();
            let test: Vec<TrainingRow> = rows.iter().zip(&assign).filter(|(_, &a)| a == fold).map(|(r, _)| *r).collect();
            let model = GpModel::train(&train, kernel, opts.fit)?;
            Ok(FoldScore { kernel, fold, r2: evaluate_r2(&model, &test)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_r2: Vec<(KernelKind, f64)> = kernels
        .iter()
        .map(|&k| {
            let s: Vec<f64> = scores.iter().filter(|s| s.kernel == k).map(|s| s.r2).collect();
            (k, s.iter().sum::<f64>() / s.len() as f64)
        })
        .collect();
    let best_kernel = mean_r2.iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|(k, _)| *k).unwrap_or_default();
    let best_hyperparams = GpModel::train(rows, best_kernel, opts.fit)?.hyperparams().clone();
    Ok(CvReport { scores, mean_r2, best_kernel, best_hyperparams })
}
