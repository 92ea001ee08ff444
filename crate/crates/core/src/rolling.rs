//! Expanding-window (rolling-origin) out-of-sample evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::metrics::mape;
use crate::models::{fit_model, forecast, FitOptions, ModelKind, MIN_OBSERVATIONS};
use crate::series::MonthlySeries;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RollingMode {
    /// Forecast `min(horizon, remaining)` steps from every origin.
    #[default]
    #[serde(rename = "fixed")]
    FixedHorizon,
    /// Forecast every remaining point from every origin.
    #[serde(rename = "to-end")]
    ToEnd,
}

impl std::str::FromStr for RollingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(RollingMode::FixedHorizon),
            "to-end" => Ok(RollingMode::ToEnd),
            other => Err(Error::Validation(format!(
                "unknown rolling mode '{other}' (expected fixed or to-end)"
            ))),
        }
    }
}

impl std::fmt::Display for RollingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RollingMode::FixedHorizon => "fixed",
            RollingMode::ToEnd => "to-end",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RollingConfig {
    pub min_train: usize,
    pub horizon: usize,
    pub mode: RollingMode,
    pub fit: FitOptions,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for RollingConfig {
    fn default() -> Self {
        Self {
            min_train: MIN_OBSERVATIONS,
            horizon: 3,
            mode: RollingMode::FixedHorizon,
            fit: FitOptions::default(),
            execution: Execution::default(),
        }
    }
}

impl RollingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Validation("horizon must be at least 1".into()));
        }
        if self.min_train < 1 {
            return Err(Error::Validation("min_train must be at least 1".into()));
        }
        Ok(())
    }

    /// `(train_size, horizon)` for every window over a series of length `n`.
    pub fn windows(&self, n: usize) -> Vec<(usize, usize)> {
        (self.min_train..n)
            .map(|ts| {
                let remaining = n - ts;
                let h = match self.mode {
                    RollingMode::FixedHorizon => self.horizon.min(remaining),
                    RollingMode::ToEnd => remaining,
                };
                (ts, h)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollingWindow {
    pub train_size: usize,
    pub horizon: usize,
    /// `None` when the window failed.
    pub mape: Option<f64>,
    pub n_skipped_zero: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollingResult {
    pub model: ModelKind,
    pub mode: RollingMode,
    pub min_train: usize,
    pub horizon: usize,
    pub windows: Vec<RollingWindow>,
    /// Mean over the successful windows.
    pub average_mape: f64,
    pub failed_windows: usize,
}

fn evaluate_window(
    series: &MonthlySeries,
    kind: ModelKind,
    options: &FitOptions,
    train_size: usize,
    horizon: usize,
) -> Result<crate::metrics::Mape> {
    let train = series.prefix(train_size)?;
    let model = fit_model(&train, kind, options)?;
    let fc = forecast(&model, &train, horizon)?;
    mape(&series.values()[train_size..train_size + horizon], &fc.point)
}

/// Refits `kind` on every prefix of length `min_train..n` and scores its
/// forecasts against the held-out observations.
pub fn rolling_forecast(
    series: &MonthlySeries,
    kind: ModelKind,
    config: &RollingConfig,
) -> Result<RollingResult> {
    config.validate()?;
    if series.len() < config.min_train + 1 {
        return Err(Error::InsufficientData {
            needed: config.min_train + 1,
            got: series.len(),
        });
    }
    let plan = config.windows(series.len());
    let windows: Vec<RollingWindow> = config.execution.map(&plan, |&(train_size, horizon)| {
        match evaluate_window(series, kind, &config.fit, train_size, horizon) {
            Ok(m) => RollingWindow {
                train_size,
                horizon,
                mape: Some(m.value),
                n_skipped_zero: m.n_skipped,
                error: None,
            },
            Err(e) => RollingWindow {
                train_size,
                horizon,
                mape: None,
                n_skipped_zero: 0,
                error: Some(e.to_string()),
            },
        }
    });

    let ok: Vec<f64> = windows.iter().filter_map(|w| w.mape).collect();
    if ok.is_empty() {
        return Err(Error::AllWindowsFailed {
            windows: windows.len(),
            first: windows[0].error.clone().unwrap_or_default(),
        });
    }
    Ok(RollingResult {
        model: kind,
        mode: config.mode,
        min_train: config.min_train,
        horizon: config.horizon,
        failed_windows: windows.len() - ok.len(),
        average_mape: ok.iter().sum::<f64>() / ok.len() as f64,
        windows,
    })
}
