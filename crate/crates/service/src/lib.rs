//! HTTP API over `epiforecast-core`.
//!
//! A client uploads a CSV once and gets a session id back; fits, forecasts
//! and rolling evaluations then refer to regions of that session. Every
//! report body is the same JSON the `epiforecast` command line tool prints
//! with `--json` for the same data and parameters.

mod error;
mod jobs;
mod routes;
mod sessions;

use std::io;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use epiforecast_core::Execution;

pub use error::ApiError;
pub use routes::router;
pub use sessions::random_id;

use jobs::JobStore;
use sessions::SessionStore;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Largest accepted request body in bytes.
    pub max_upload_bytes: usize,
    pub session_ttl: Duration,
    /// Keep a copy of every session here so it survives a restart.
    pub persist_dir: Option<PathBuf>,
    /// Rolling requests estimated to need more model fits than this run as
    /// background jobs.
    pub job_threshold: usize,
    pub execution: Execution,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            max_upload_bytes: 10 * 1024 * 1024,
            session_ttl: Duration::from_secs(2 * 60 * 60),
            persist_dir: None,
            job_threshold: 20_000,
            execution: Execution::default(),
        }
    }
}

struct Shared {
    config: ServiceConfig,
    sessions: SessionStore,
    jobs: JobStore,
}

#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    pub fn new(config: ServiceConfig) -> io::Result<Self> {
        let sessions = SessionStore::open(config.session_ttl, config.persist_dir.clone())?;
        let jobs = JobStore::new(config.session_ttl);
        Ok(AppState(Arc::new(Shared {
            config,
            sessions,
            jobs,
        })))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.0.config
    }

    /// Drops expired sessions and old job results.
    pub fn sweep(&self) -> (usize, usize) {
        (self.0.sessions.sweep(), self.0.jobs.sweep())
    }
}

pub(crate) fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}
