//! HTTP/JSON front end over the decision pipeline, catalog, audit log and
//! benchmark harness.
//!
//! | Method | Path | Auth |
//! |---|---|---|
//! | POST | `/decisions` | — |
//! | GET | `/audit`, `/audit/export` | admin |
//! | GET, POST | `/catalog`, `/catalog/{section}` | admin |
//! | POST | `/eval/runs` | — |
//! | GET | `/healthz` | — |
//!
//! Admin calls carry `Authorization: Bearer <ACCESSGOV_ADMIN_TOKEN>`.

pub mod config;
pub mod error;
pub mod routes;
pub mod state;

use std::future::Future;

use tower_http::services::ServeDir;
use tower_http::trace::TraceLayer;

pub use config::{env_lookup, remote_from_lookup, resilience_from_lookup, ConfigError, RemoteSettings, Secret, ServiceConfig};
pub use error::AppError;
pub use routes::router;
pub use state::{build_reasoner, AppParts, AppState, StartupError};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Startup(#[from] StartupError),
    #[error("binding {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server: {0}")]
    Serve(std::io::Error),
}

/// Full application: API routes, optional static console, request tracing.
pub fn app(state: AppState, config: &ServiceConfig) -> axum::Router {
    let mut router = router(state);
    if let Some(dir) = &config.static_dir {
        router = router.fallback_service(ServeDir::new(dir));
    }
    router.layer(TraceLayer::new_for_http())
}

/// Binds and serves until `shutdown` resolves.
pub async fn serve(config: ServiceConfig, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServiceError> {
    let state = AppState::from_config(&config)?;
    let listener = tokio::net::TcpListener::bind(config.bind).await.map_err(|source| ServiceError::Bind {
        addr: config.bind.to_string(),
        source,
    })?;
    let addr = listener.local_addr().map_err(ServiceError::Serve)?;
    tracing::info!(%addr, reasoner = %config.reasoner, "listening");
    axum::serve(listener, app(state, &config))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(ServiceError::Serve)
}

/// Serves until Ctrl-C.
pub async fn run(config: ServiceConfig) -> Result<(), ServiceError> {
    serve(config, async {
        let _ = tokio::signal::ctrl_c().await;
        tracing::info!("shutting down");
    })
    .await
}
