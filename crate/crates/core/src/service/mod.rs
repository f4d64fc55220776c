//! HTTP API over the whole pipeline, backed by a file store.
//!
//! Routes live under `/v1`; errors come back as
//! `{"error": {"code", "message"}, "diagnostics": [...]}` with 404 for
//! missing artifacts, 409 for state conflicts and 400 otherwise. When a UI
//! directory is configured its files are served under `/ui/`.

mod api;
pub mod ops;
pub mod store;

pub use api::{router, status_for, ApiError, AppState};
pub use store::Workspace;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub struct ServeConfig {
    pub addr: SocketAddr,
    pub data_dir: Option<PathBuf>,
    pub ui_dir: Option<PathBuf>,
}

pub fn app(workspace: Workspace, ui_dir: Option<PathBuf>) -> axum::Router {
    router(AppState {
        workspace: Arc::new(workspace),
        ui_dir,
    })
}

/// Runs the server until interrupted.
pub async fn serve(cfg: ServeConfig) -> std::io::Result<()> {
    let workspace = match &cfg.data_dir {
        Some(dir) => Workspace::open(dir).map_err(|d| std::io::Error::other(d.message))?,
        None => Workspace::in_memory(),
    };
    let listener = tokio::net::TcpListener::bind(cfg.addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app(workspace, cfg.ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
