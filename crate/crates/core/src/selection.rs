//! Automatic model selection with AR error correction.
//!
//! 1. Rolling-origin evaluation of the four regression families.
//! 2. The family with the lowest average MAPE is the base choice (ties go to
//!    the lower model number).
//! 3. The base choice is refitted with an AR model of its residuals and
//!    evaluated the same way.
//! 4. The corrected model is kept only if its average MAPE is lower by more
//!    than [`TIE_TOLERANCE`].
//! 5. In-sample metrics for all five models are reported; they do not
//!    influence the choice.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::MetricSet;
use crate::models::{fit_model, BaseKind, ModelKind, MIN_OBSERVATIONS};
use crate::rolling::{rolling_forecast, RollingConfig, RollingResult};
use crate::series::{MonthDate, MonthlySeries};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateOutcome {
    pub model: ModelKind,
    pub result: Option<RollingResult>,
    pub error: Option<String>,
}

impl CandidateOutcome {
    fn from_result(model: ModelKind, r: Result<RollingResult>) -> (Self, Option<Error>) {
        match r {
            Ok(result) => (
                Self {
                    model,
                    result: Some(result),
                    error: None,
                },
                None,
            ),
            Err(e) => (
                Self {
                    model,
                    result: None,
                    error: Some(e.to_string()),
                },
                Some(e),
            ),
        }
    }

    pub fn average_mape(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.average_mape)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InSampleEntry {
    pub model: ModelKind,
    pub metrics: Option<MetricSet>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub region: String,
    pub start: MonthDate,
    pub n_months: usize,
    pub candidates: Vec<CandidateOutcome>,
    pub base_choice: ModelKind,
    pub corrected: CandidateOutcome,
    pub final_choice: ModelKind,
    pub final_average_mape: f64,
    pub in_sample: Vec<InSampleEntry>,
}

impl SelectionReport {
    /// Rolling outcomes for all five models, corrected model last.
    pub fn all_outcomes(&self) -> impl Iterator<Item = &CandidateOutcome> {
        self.candidates.iter().chain(std::iter::once(&self.corrected))
    }
}

/// MAPE differences at or below this are ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

fn require_length(series: &MonthlySeries, config: &RollingConfig) -> Result<()> {
    let needed = config.min_train.max(MIN_OBSERVATIONS) + config.horizon;
    if series.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: series.len(),
        });
    }
    Ok(())
}

/// Rolling evaluation of the four base families; returns the best one
/// (lowest average MAPE, ties to the lower model number) and all outcomes.
pub fn choose_base(
    series: &MonthlySeries,
    config: &RollingConfig,
) -> Result<(BaseKind, Vec<CandidateOutcome>)> {
    config.validate()?;
    require_length(series, config)?;
    let results = config.execution.map(&BaseKind::ALL, |b| {
        rolling_forecast(series, ModelKind::from(*b), config)
    });
    let mut outcomes = Vec::with_capacity(4);
    let mut first_error = None;
    for (b, r) in BaseKind::ALL.iter().zip(results) {
        let (o, e) = CandidateOutcome::from_result(ModelKind::from(*b), r);
        if first_error.is_none() {
            first_error = e;
        }
        outcomes.push(o);
    }
    let mut best: Option<(BaseKind, f64)> = None;
    for (b, o) in BaseKind::ALL.iter().zip(&outcomes) {
        if let Some(m) = o.average_mape() {
            if best.is_none_or(|(_, bm)| m < bm - TIE_TOLERANCE) {
                best = Some((*b, m));
            }
        }
    }
    match best {
        Some((b, _)) => Ok((b, outcomes)),
        None => Err(first_error.expect("every candidate failed with an error")),
    }
}

pub fn select_model(series: &MonthlySeries, config: &RollingConfig) -> Result<SelectionReport> {
    let (base, candidates) = choose_base(series, config)?;
    let base_kind = ModelKind::from(base);
    let corrected_kind = ModelKind::ArCorrected(base);
    let (corrected, _) =
        CandidateOutcome::from_result(corrected_kind, rolling_forecast(series, corrected_kind, config));

    let base_mape = candidates[base_kind.number() as usize - 1]
        .average_mape()
        .expect("base choice has a rolling result");
    let (final_choice, final_average_mape) = match corrected.average_mape() {
        Some(m) if m < base_mape - TIE_TOLERANCE => (corrected_kind, m),
        _ => (base_kind, base_mape),
    };

    let kinds: Vec<ModelKind> = BaseKind::ALL
        .iter()
        .map(|b| ModelKind::from(*b))
        .chain(std::iter::once(corrected_kind))
        .collect();
    let in_sample = config.execution.map(&kinds, |k| {
        match fit_model(series, *k, &config.fit).and_then(|m| MetricSet::in_sample(&m, series)) {
            Ok(metrics) => InSampleEntry {
                model: *k,
                metrics: Some(metrics),
                error: None,
            },
            Err(e) => InSampleEntry {
                model: *k,
                metrics: None,
                error: Some(e.to_string()),
            },
        }
    });

    Ok(SelectionReport {
        region: series.region().to_string(),
        start: series.start(),
        n_months: series.len(),
        candidates,
        base_choice: base_kind,
        corrected,
        final_choice,
        final_average_mape,
        in_sample,
    })
}
