//! HTTP service guiding a live testing campaign.

mod http;
mod session;
mod store;

pub use http::{router, AppState};
pub use session::{
    AcquisitionMethod, CreateSessionRequest, CurvePoint, HistoryEntry, OutcomeRequest, PriorSource, Provenance,
    RecommendResponse, Recommendation, Recomputed, Session, SessionConfig, SessionStatus, Snapshot, CURVE_POINTS,
    SCHEMA_VERSION,
};
pub use store::SessionStore;

use crate::error::Error;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("session not found")]
    NotFound,
    #[error("{0}")]
    Conflict(String),
    #[error("no GP model is loaded; create the session from an explicit, broad prior instead")]
    GpUnavailable,
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("{0}")]
    Internal(String),
}

impl LabError {
    pub fn code(&self) -> &'static str {
        match self {
            LabError::NotFound => "not_found",
            LabError::Conflict(_) => "conflict",
            LabError::GpUnavailable => "gp_unavailable",
            LabError::Validation(_) => "validation",
            LabError::Degenerate(_) => "degenerate_posterior",
            LabError::Internal(_) => "internal",
        }
    }
}

impl From<Error> for LabError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(m) | Error::Config(m) => LabError::Validation(m),
            Error::DegeneratePosterior(m) => LabError::Degenerate(m),
            other => LabError::Internal(other.to_string()),
        }
    }
}
