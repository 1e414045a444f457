//! Lab campaign service.
//!
//! Environment: `DATA_DIR` (default `./lab-data`), `BIND_ADDR` (default
//! `127.0.0.1:8080`), `GP_MODEL_PATH` (optional JSON model).

use std::sync::Arc;

use fatigue_core::gp::GpModel;
use fatigue_core::lab::{router, AppState, SessionStore};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let data_dir = std::env::var("DATA_DIR").unwrap_or_else(|_| "lab-data".into());
    let bind = std::env::var("BIND_ADDR").unwrap_or_else(|_| "127.0.0.1:8080".into());
    let gp = match std::env::var_os("GP_MODEL_PATH") {
        Some(p) => {
            let m = GpModel::load_json(std::path::Path::new(&p))?;
            log::info!("loaded GP model from {}", p.to_string_lossy());
            Some(Arc::new(m))
        }
        None => {
            log::warn!("GP_MODEL_PATH not set; sessions need an explicit prior");
            None
        }
    };
    let store = Arc::new(SessionStore::open(&data_dir).map_err(|e| e.to_string())?);
    let app = router(AppState { store, gp });
    let listener = tokio::net::TcpListener::bind(&bind).await?;
    log::info!("listening on {bind}, data in {data_dir}");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
