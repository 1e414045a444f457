//! Gaussian-process prior over log10 of the mean fatigue strength.

mod cv;
mod data;
mod kernel;
mod model;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub use cv::{cross_validate, evaluate_r2, fold_assignment, r_squared, train_test_split, CvOptions, CvReport, FoldScore};
pub use data::{
    load_dataset, read_dataset_csv, synthesize_training_data, synthesize_training_data_with_noise, synthetic_truth_log10,
    write_dataset_csv, Dataset, FeatureEncoder, LoadType, MaterialFeatures, TrainingRow, ENCODED_DIM,
    SYNTHETIC_DEFAULT_ROWS, SYNTHETIC_NOISE_LOG10,
};
pub use kernel::{gram, kernel_eval, KernelHyperparams, KernelKind, Stationary, NOISE_FLOOR};
pub use model::{fit_hyperparams, log_marginal_likelihood, noisy_gram, FitOptions, GpModel, Standardizer};

/// Normal distribution over log10 mu_L.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPredictive")]
pub struct PredictiveNormal {
    pub mean_log10: f64,
    pub std_log10: f64,
}

#[derive(Deserialize)]
struct RawPredictive {
    mean_log10: f64,
    std_log10: f64,
}

impl TryFrom<RawPredictive> for PredictiveNormal {
    type Error = Error;
    fn try_from(r: RawPredictive) -> Result<Self> {
        PredictiveNormal::new(r.mean_log10, r.std_log10)
    }
}

impl PredictiveNormal {
    pub fn new(mean_log10: f64, std_log10: f64) -> Result<Self> {
        if !mean_log10.is_finite() {
            return Err(domain(format!("predictive mean must be finite, got {mean_log10}")));
        }
        if !(std_log10 > 0.0 && std_log10.is_finite()) {
            return Err(domain(format!("predictive std must be positive, got {std_log10}")));
        }
        Ok(Self { mean_log10, std_log10 })
    }

    /// Median in load units.
    pub fn median_load(&self) -> f64 {
        10f64.powf(self.mean_log10)
    }
}
