//! Monthly case-count forecasting: seasonal regression models with an
//! optional AR correction of their residuals, residual diagnostics,
//! rolling-origin evaluation and automatic model selection.
//!
//! ```
//! use epiforecast_core::{fit_model, forecast, FitOptions, ModelKind, MonthDate, MonthlySeries};
//!
//! let values: Vec<f64> = (0..48).map(|i| 100.0 + (i % 12) as f64 * 3.0 + i as f64).collect();
//! let series = MonthlySeries::new("A", MonthDate::new(2019, 1).unwrap(), values).unwrap();
//! let model = fit_model(&series, ModelKind::PolySeason, &FitOptions::default()).unwrap();
//! let fc = forecast(&model, &series, 3).unwrap();
//! assert_eq!(fc.months[0].to_string(), "2023-01");
//! ```

pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod ingest;
pub mod metrics;
pub mod models;
pub mod ols;
pub mod report;
pub mod rolling;
pub mod selection;
pub mod series;
pub mod special;

pub use error::{Error, ErrorCategory, Result};
pub use exec::Execution;
pub use ingest::{parse_csv, Dataset};
pub use metrics::MetricSet;
pub use models::{fit_model, forecast, BaseKind, FitOptions, FittedModel, ForecastResult, ModelKind};
pub use report::ModelRequest;
pub use rolling::{rolling_forecast, RollingConfig, RollingMode, RollingResult};
pub use selection::{select_model, SelectionReport};
pub use series::{MonthDate, MonthlySeries};
