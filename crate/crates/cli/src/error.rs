use std::path::PathBuf;

use epiforecast_core::ErrorCategory;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("region '{region}' not found; available regions: {}", .available.join(", "))]
    RegionNotFound {
        region: String,
        available: Vec<String>,
    },

    #[error(transparent)]
    Core(#[from] epiforecast_core::Error),

    #[error("every region failed; first: {message}")]
    AllRegionsFailed {
        code: &'static str,
        category: ErrorCategory,
        message: String,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::RegionNotFound { .. } => 7,
            CliError::Core(e) => category_exit_code(e.category()),
            CliError::AllRegionsFailed { category, .. } => category_exit_code(*category),
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::RegionNotFound { .. } => "region-not-found",
            CliError::Core(e) => e.code(),
            CliError::AllRegionsFailed { code, .. } => code,
        }
    }
}

fn category_exit_code(c: ErrorCategory) -> i32 {
    match c {
        ErrorCategory::Validation => 4,
        ErrorCategory::InsufficientData => 5,
        ErrorCategory::Numerical => 6,
    }
}
