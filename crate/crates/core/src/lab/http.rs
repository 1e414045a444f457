//! JSON routes of the lab service.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use uuid::Uuid;

use super::session::{AcquisitionMethod, CreateSessionRequest, OutcomeRequest, Session};
use super::store::SessionStore;
use super::LabError;
use crate::gp::GpModel;

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    pub gp: Option<Arc<GpModel>>,
}

impl IntoResponse for LabError {
    fn into_response(self) -> Response {
        let status = match self {
            LabError::NotFound => StatusCode::NOT_FOUND,
            LabError::Conflict(_) | LabError::GpUnavailable => StatusCode::CONFLICT,
            LabError::Validation(_) => StatusCode::BAD_REQUEST,
            LabError::Degenerate(_) => StatusCode::UNPROCESSABLE_ENTITY,
            LabError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.code(), "message": self.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, LabError>;

/// Runs posterior computations off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| LabError::Internal(e.to_string()))?
}

fn parse_id(raw: &str) -> ApiResult<Uuid> {
    Uuid::parse_str(raw).map_err(|_| LabError::NotFound)
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| LabError::Validation(format!("invalid request body: {e}")))
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn create(State(st): State<AppState>, body: axum::body::Bytes) -> ApiResult<Response> {
    let req: CreateSessionRequest = parse_json(&body)?;
    let snap = blocking(move || {
        let session = Session::create(req, st.gp.as_deref())?;
        let snap = session.snapshot()?;
        st.store.insert(session)?;
        Ok(snap)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(snap)).into_response())
}

#[derive(Deserialize)]
struct RecommendQuery {
    method: Option<AcquisitionMethod>,
}

async fn recommend(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<RecommendQuery>,
) -> ApiResult<Response> {
    let id = parse_id(&id)?;
    let rec = blocking(move || st.store.update(id, |s| s.recommend(q.method))).await?;
    Ok(Json(rec).into_response())
}

async fn outcomes(State(st): State<AppState>, Path(id): Path<String>, body: axum::body::Bytes) -> ApiResult<Response> {
    let id = parse_id(&id)?;
    let req: OutcomeRequest = parse_json(&body)?;
    let snap = blocking(move || {
        st.store.update(id, |s| {
            s.record_outcome(&req)?;
            s.snapshot()
        })
    })
    .await?;
    Ok(Json(snap).into_response())
}

async fn get_session(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let id = parse_id(&id)?;
    let snap = blocking(move || {
        let h = st.store.get(id)?;
        let s = h.lock().clone();
        s.snapshot()
    })
    .await?;
    Ok(Json(snap).into_response())
}

async fn close(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let id = parse_id(&id)?;
    let snap = blocking(move || {
        st.store.update(id, |s| {
            s.close()?;
            s.snapshot()
        })
    })
    .await?;
    Ok(Json(snap).into_response())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/recommend", post(recommend))
        .route("/sessions/{id}/outcomes", post(outcomes))
        .route("/sessions/{id}/close", post(close))
        .with_state(state)
}
