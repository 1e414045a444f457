//! Lab campaign sessions: the state machine behind the HTTP service.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::Error;
use crate::gp::{GpModel, MaterialFeatures};
use crate::inference::{
    acquire_entropy_on_grid, acquire_map, discretize_load, evaluate_grid, map_estimate, posterior_std, CandidateSearch,
    Discretization, EntropyEstimator, EntropyOptions, GridOptions, MapEstimate, PosteriorGrid, PosteriorStd, PriorSpec,
    SigmaPrior, WidthScale, DEFAULT_ENTROPY_SAMPLES, DEFAULT_GRID_POINTS, DEFAULT_RESTARTS,
};
use crate::model::{ExperimentSeries, Outcome};
use crate::rng::{derive_seed, stream};

use super::LabError;

pub const SCHEMA_VERSION: u32 = 1;
/// Upper bound on the number of points of a snapshot curve.
pub const CURVE_POINTS: usize = 1000;

fn default_sigma_l() -> f64 {
    10f64.powf(0.03)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AcquisitionMethod {
    #[default]
    Entropy,
    Map,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub acquisition: AcquisitionMethod,
    pub discretization: Discretization,
    pub grid_points: usize,
    pub entropy_samples: usize,
    pub restarts: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            acquisition: AcquisitionMethod::Entropy,
            discretization: Discretization::None,
            grid_points: DEFAULT_GRID_POINTS,
            entropy_samples: DEFAULT_ENTROPY_SAMPLES,
            restarts: DEFAULT_RESTARTS,
        }
    }
}

impl SessionConfig {
    fn validate(&self) -> Result<(), LabError> {
        if self.grid_points < 3 || self.grid_points > 2_000_000 {
            return Err(LabError::Validation(format!("grid_points must lie in 3..=2000000, got {}", self.grid_points)));
        }
        if self.entropy_samples == 0 || self.restarts == 0 {
            return Err(LabError::Validation("entropy_samples and restarts must be positive".into()));
        }
        Ok(())
    }
}

/// Where the prior came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    GpPrediction { features: MaterialFeatures },
    Manual,
}

/// Prior part of a create request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum PriorSource {
    /// Prior mode in N and a width.
    Manual {
        mean_load: f64,
        width: f64,
        #[serde(default)]
        width_scale: WidthScale,
        #[serde(default = "default_sigma_l")]
        sigma_l: f64,
    },
    /// A fully specified prior.
    Explicit { prior: PriorSpec },
    /// GP prediction for a material.
    Features {
        features: MaterialFeatures,
        #[serde(default = "default_sigma_l")]
        sigma_l: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    pub prior: PriorSource,
    #[serde(default)]
    pub config: SessionConfig,
    #[serde(default)]
    pub material_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Active,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub recommended_load: f64,
    pub discretized_load: f64,
    pub method: AcquisitionMethod,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    /// The recommendation this outcome answered, if any.
    pub recommended_load: Option<f64>,
    pub discretized_load: Option<f64>,
    /// Load actually tested.
    pub load: f64,
    pub outcome: Outcome,
    /// Set when the tested load differs from the pending recommendation.
    #[serde(rename = "override")]
    pub is_override: bool,
    pub map_estimate: MapEstimate,
    pub posterior_std: PosteriorStd,
    pub timestamp: DateTime<Utc>,
    pub idempotency_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub schema_version: u32,
    pub id: Uuid,
    pub created_at: DateTime<Utc>,
    pub prior: PriorSpec,
    pub provenance: Provenance,
    pub config: SessionConfig,
    pub status: SessionStatus,
    pub series: ExperimentSeries,
    pub history: Vec<HistoryEntry>,
    pub pending: Option<Recommendation>,
    pub map_estimate: MapEstimate,
    pub posterior_std: PosteriorStd,
    /// Set when the posterior vanished on the prior support.
    pub degenerate: bool,
    /// Base seed of the entropy sampler.
    pub entropy_seed: u64,
    /// Number of recommendations issued so far.
    pub recommendations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub mu_log10: f64,
    pub posterior_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    #[serde(flatten)]
    pub session: Session,
    pub curve: Vec<CurvePoint>,
    /// Human-readable warning, e.g. when the prior contradicts the data.
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecommendResponse {
    pub recommended_load: f64,
    pub discretized_load: f64,
    pub method: AcquisitionMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRequest {
    pub load: f64,
    pub outcome: Outcome,
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

fn loads_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

const DEGENERATE_ADVICE: &str =
    "the posterior vanishes on the prior support: the observations contradict the prior; widen the prior";

/// Posterior summaries recomputed from scratch.
#[derive(Debug, Clone)]
pub struct Recomputed {
    pub grid: PosteriorGrid,
    pub map_estimate: MapEstimate,
    pub posterior_std: PosteriorStd,
}

impl Session {
    pub fn create(req: CreateSessionRequest, gp: Option<&GpModel>) -> Result<Self, LabError> {
        req.config.validate()?;
        let (prior, provenance) = match req.prior {
            PriorSource::Manual { mean_load, width, width_scale, sigma_l } => (
                PriorSpec::from_width(mean_load, width, width_scale, SigmaPrior::Fixed { sigma_l })?,
                Provenance::Manual,
            ),
            PriorSource::Explicit { prior } => {
                prior.validate()?;
                (prior, Provenance::Manual)
            }
            PriorSource::Features { features, sigma_l } => {
                let gp = gp.ok_or(LabError::GpUnavailable)?;
                let pred = gp.predict(&features)?;
                (PriorSpec::new(pred, SigmaPrior::Fixed { sigma_l })?, Provenance::GpPrediction { features })
            }
        };
        let id = Uuid::new_v4();
        let mut s = Session {
            schema_version: SCHEMA_VERSION,
            id,
            created_at: Utc::now(),
            prior,
            provenance,
            config: req.config,
            status: SessionStatus::Active,
            series: ExperimentSeries::new(if req.material_id.is_empty() { id.to_string() } else { req.material_id }),
            history: vec![],
            pending: None,
            map_estimate: MapEstimate { mu_hat: prior.mode_load(), sigma_hat: 1.0, log_posterior_at_map: 0.0 },
            posterior_std: PosteriorStd { mean_log10: 0.0, std_log10: 0.0, std_load: 0.0 },
            degenerate: false,
            entropy_seed: derive_seed(id.as_u64_pair().0 ^ id.as_u64_pair().1, &[stream::ENTROPY]),
            recommendations: 0,
        };
        let r = s.recompute()?;
        s.apply(&r);
        Ok(s)
    }

    fn grid_options(&self, allow_degenerate: bool) -> GridOptions {
        GridOptions { n_points: self.config.grid_points, allow_degenerate }
    }

    /// MAP estimate, posterior std and grid from the prior and the series.
    pub fn recompute(&self) -> Result<Recomputed, LabError> {
        let grid = evaluate_grid(&self.prior, &self.series, self.grid_options(true))?;
        let map_estimate = map_estimate(&self.prior, &self.series, self.config.restarts)?;
        let posterior_std = posterior_std(&grid)?;
        Ok(Recomputed { grid, map_estimate, posterior_std })
    }

    fn apply(&mut self, r: &Recomputed) {
        self.map_estimate = r.map_estimate;
        self.posterior_std = r.posterior_std;
        self.degenerate = r.grid.degenerate;
    }

    fn ensure_active(&self) -> Result<(), LabError> {
        match self.status {
            SessionStatus::Active => Ok(()),
            SessionStatus::Closed => Err(LabError::Conflict("session is closed".into())),
        }
    }

    pub fn recommend(&mut self, method: Option<AcquisitionMethod>) -> Result<RecommendResponse, LabError> {
        self.ensure_active()?;
        if let Some(p) = &self.pending {
            return Err(LabError::Conflict(format!(
                "a recommendation of {} N is still pending; record its outcome first",
                p.discretized_load
            )));
        }
        let method = method.unwrap_or(self.config.acquisition);
        let grid = match evaluate_grid(&self.prior, &self.series, self.grid_options(false)) {
            Err(Error::DegeneratePosterior(_)) => return Err(LabError::Degenerate(DEGENERATE_ADVICE.into())),
            other => other?,
        };
        let recommended = match method {
            AcquisitionMethod::Map => acquire_map(&self.map_estimate),
            AcquisitionMethod::Entropy => {
                let opts = EntropyOptions {
                    estimator: EntropyEstimator::Sampled {
                        n_samples: self.config.entropy_samples,
                        seed: derive_seed(self.entropy_seed, &[self.recommendations]),
                    },
                    search: CandidateSearch::Continuous { restarts: self.config.restarts },
                };
                match acquire_entropy_on_grid(&grid, &self.map_estimate, opts) {
                    Err(Error::DegeneratePosterior(_)) => return Err(LabError::Degenerate(DEGENERATE_ADVICE.into())),
                    other => other?,
                }
            }
        };
        let discretized = discretize_load(recommended, self.config.discretization);
        self.recommendations += 1;
        self.pending = Some(Recommendation {
            recommended_load: recommended,
            discretized_load: discretized,
            method,
            created_at: Utc::now(),
        });
        Ok(RecommendResponse { recommended_load: recommended, discretized_load: discretized, method })
    }

    /// Appends an outcome. Returns `false` when the idempotency key was
    /// already used and nothing changed.
    pub fn record_outcome(&mut self, req: &OutcomeRequest) -> Result<bool, LabError> {
        self.ensure_active()?;
        if !(req.load > 0.0 && req.load.is_finite()) {
            return Err(LabError::Validation(format!("load must be positive, got {}", req.load)));
        }
        if let Some(key) = &req.idempotency_key {
            if self.history.iter().any(|h| h.idempotency_key.as_deref() == Some(key)) {
                return Ok(false);
            }
        }
        let answered = self.pending.filter(|p| loads_match(p.discretized_load, req.load));
        let mut next = self.clone();
        next.series.push(req.load, req.outcome)?;
        let r = next.recompute()?;
        next.apply(&r);
        if answered.is_some() {
            next.pending = None;
        }
        next.history.push(HistoryEntry {
            recommended_load: answered.map(|p| p.recommended_load),
            discretized_load: answered.map(|p| p.discretized_load),
            load: req.load,
            outcome: req.outcome,
            is_override: answered.is_none(),
            map_estimate: next.map_estimate,
            posterior_std: next.posterior_std,
            timestamp: Utc::now(),
            idempotency_key: req.idempotency_key.clone(),
        });
        *self = next;
        Ok(true)
    }

    pub fn close(&mut self) -> Result<(), LabError> {
        self.ensure_active()?;
        self.status = SessionStatus::Closed;
        self.pending = None;
        Ok(())
    }

    pub fn snapshot(&self) -> Result<Snapshot, LabError> {
        let grid = evaluate_grid(&self.prior, &self.series, self.grid_options(true))?;
        let curve = grid
            .downsample(CURVE_POINTS)
            .into_iter()
            .map(|(mu_log10, posterior_density)| CurvePoint { mu_log10, posterior_density })
            .collect();
        let warning = self.degenerate.then(|| DEGENERATE_ADVICE.to_string());
        Ok(Snapshot { session: self.clone(), curve, warning })
    }

    /// Largest absolute deviation between the stored and recomputed MAP and
    /// posterior std.
    pub fn replay_deviation(&self) -> Result<f64, LabError> {
        let r = self.recompute()?;
        Ok([
            (r.map_estimate.mu_hat - self.map_estimate.mu_hat).abs(),
            (r.map_estimate.log_posterior_at_map - self.map_estimate.log_posterior_at_map).abs(),
            (r.posterior_std.std_log10 - self.posterior_std.std_log10).abs(),
            (r.posterior_std.std_load - self.posterior_std.std_load).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max))
    }
}
