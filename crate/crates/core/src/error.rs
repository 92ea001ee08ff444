use serde::Serialize;
use thiserror::Error;

use crate::series::MonthDate;

/// Coarse failure class, used by the CLI for exit codes and by the
/// service for HTTP status mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCategory {
    Validation,
    InsufficientData,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} out of range for series of length {len}")]
    OutOfBounds { index: usize, len: usize },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("singular design: column(s) {} are linearly dependent on earlier columns", .columns.join(", "))]
    SingularDesign { columns: Vec<String> },

    #[error("non-positive value {value} at {month} cannot be log-transformed in strict mode")]
    NonPositive { month: MonthDate, value: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("MAPE is undefined: all actual values are zero")]
    UndefinedMape,

    #[error("all {windows} rolling windows failed; first failure: {first}")]
    AllWindowsFailed { windows: usize, first: String },

    // ingest
    #[error("empty input: {0}")]
    Empty(String),

    #[error("missing 'Date' column in header")]
    MissingDateColumn,

    #[error("header: {0}")]
    Header(String),

    #[error("row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("duplicate month {month} (rows {first_row} and {second_row})")]
    DuplicateMonth {
        month: MonthDate,
        first_row: usize,
        second_row: usize,
    },

    #[error("gap in monthly data: missing {}", fmt_months(.missing))]
    MonthGap { missing: Vec<MonthDate> },

    #[error("csv: {0}")]
    Csv(String),
}

fn fmt_months(months: &[MonthDate]) -> String {
    months
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InsufficientData { .. } => ErrorCategory::InsufficientData,
            Error::SingularDesign { .. } | Error::Degenerate(_) | Error::AllWindowsFailed { .. } => {
                ErrorCategory::Numerical
            }
            _ => ErrorCategory::Validation,
        }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::OutOfBounds { .. } => "out-of-bounds",
            Error::Validation(_) => "validation",
            Error::InsufficientData { .. } => "insufficient-data",
            Error::SingularDesign { .. } => "singular-design",
            Error::NonPositive { .. } => "non-positive-value",
            Error::Degenerate(_) => "degenerate-input",
            Error::UndefinedMape => "undefined-mape",
            Error::AllWindowsFailed { .. } => "all-windows-failed",
            Error::Empty(_) => "empty-input",
            Error::MissingDateColumn => "missing-date-column",
            Error::Header(_) => "bad-header",
            Error::Parse { .. } => "parse-error",
            Error::DuplicateMonth { .. } => "duplicate-month",
            Error::MonthGap { .. } => "month-gap",
            Error::Csv(_) => "csv-error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
