use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use epiforecast_core::report::SCHEMA_VERSION;
use epiforecast_core::{Error as CoreError, ErrorCategory};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ApiError {
    #[error("unknown session '{0}'")]
    SessionNotFound(String),

    #[error("session '{0}' has expired; upload the data again")]
    SessionExpired(String),

    #[error("unknown region '{region}'; available: {}", .available.join(", "))]
    RegionNotFound { region: String, available: Vec<String> },

    #[error("unknown job '{0}'")]
    JobNotFound(String),

    #[error("job '{0}' is still running")]
    JobRunning(String),

    #[error("{0}")]
    BadRequest(String),

    #[error("{0}")]
    PayloadTooLarge(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{0}")]
    Internal(String),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    schema_version: &'static str,
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    code: &'a str,
    category: Option<ErrorCategory>,
    message: String,
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::SessionNotFound(_)
            | ApiError::SessionExpired(_)
            | ApiError::RegionNotFound { .. }
            | ApiError::JobNotFound(_) => StatusCode::NOT_FOUND,
            ApiError::JobRunning(_) => StatusCode::CONFLICT,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::PayloadTooLarge(_) => StatusCode::PAYLOAD_TOO_LARGE,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
            ApiError::Core(e) => match (e, e.category()) {
                (CoreError::NonPositive { .. } | CoreError::UndefinedMape, _) => StatusCode::UNPROCESSABLE_ENTITY,
                (_, ErrorCategory::InsufficientData) => StatusCode::UNPROCESSABLE_ENTITY,
                (_, ErrorCategory::Numerical) => StatusCode::INTERNAL_SERVER_ERROR,
                (_, ErrorCategory::Validation) => StatusCode::BAD_REQUEST,
            },
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ApiError::SessionNotFound(_) => "session-not-found",
            ApiError::SessionExpired(_) => "session-expired",
            ApiError::RegionNotFound { .. } => "region-not-found",
            ApiError::JobNotFound(_) => "job-not-found",
            ApiError::JobRunning(_) => "job-running",
            ApiError::BadRequest(_) => "invalid-request",
            ApiError::PayloadTooLarge(_) => "payload-too-large",
            ApiError::Internal(_) => "internal",
            ApiError::Core(e) => e.code(),
        }
    }

    pub fn body(&self) -> String {
        let category = match self {
            ApiError::Core(e) => Some(e.category()),
            _ => None,
        };
        let body = ErrorBody {
            schema_version: SCHEMA_VERSION,
            error: ErrorDetail {
                code: self.code(),
                category,
                message: self.to_string(),
            },
        };
        serde_json::to_string(&body).expect("error bodies serialize")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        crate::json_response(self.status(), self.body())
    }
}
