//! Serializable report bodies shared by the CLI and the HTTP service, so both
//! emit the same JSON for the same data and parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::diagnostics::{
    acf, default_ljung_box_lags, ljung_box, normality_test, pacf, qq_points, AcfResult,
    LjungBoxResult, NormalityResult, QqPoint,
};
use crate::error::{Error, ErrorCategory, Result};
use crate::metrics::MetricSet;
use crate::models::{fit_model, forecast, Coefficient, FittedModel, ModelKind};
use crate::rolling::{rolling_forecast, RollingConfig, RollingResult};
use crate::selection::{choose_base, select_model, CandidateOutcome, SelectionReport};
use crate::series::{MonthDate, MonthlySeries};

/// Version of every JSON body produced here.
pub const SCHEMA_VERSION: &str = "1.0";

/// A model as named by a user: a concrete kind, or `ar-corrected` with the
/// base chosen by rolling evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelRequest {
    Kind(ModelKind),
    AutoArCorrected,
}

impl fmt::Display for ModelRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelRequest::Kind(k) => k.fmt(f),
            ModelRequest::AutoArCorrected => f.write_str("ar-corrected"),
        }
    }
}

impl FromStr for ModelRequest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "ar-corrected" {
            Ok(ModelRequest::AutoArCorrected)
        } else {
            s.parse().map(ModelRequest::Kind)
        }
    }
}

impl Serialize for ModelRequest {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelRequest {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// How the base of an automatically corrected model was picked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaseSelection {
    pub chosen: ModelKind,
    pub candidates: Vec<CandidateOutcome>,
}

/// Resolves a request to a concrete kind, running the base-family rolling
/// comparison when needed.
pub fn resolve_model(
    series: &MonthlySeries,
    request: ModelRequest,
    config: &RollingConfig,
) -> Result<(ModelKind, Option<BaseSelection>)> {
    match request {
        ModelRequest::Kind(k) => Ok((k, None)),
        ModelRequest::AutoArCorrected => {
            let (base, candidates) = choose_base(series, config)?;
            Ok((
                ModelKind::ArCorrected(base),
                Some(BaseSelection {
                    chosen: ModelKind::from(base),
                    candidates,
                }),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub acf: AcfResult,
    pub pacf: AcfResult,
    pub ljung_box: LjungBoxResult,
    pub normality: NormalityResult,
    pub qq: Vec<QqPoint>,
}

impl Diagnostics {
    /// All residual diagnostics; `fitted_params` reduces the Ljung-Box
    /// degrees of freedom.
    pub fn compute(residuals: &[f64], fitted_params: usize) -> Result<Diagnostics> {
        let lags = default_ljung_box_lags(residuals.len());
        Ok(Diagnostics {
            acf: acf(residuals, lags)?,
            pacf: pacf(residuals, lags)?,
            ljung_box: ljung_box(residuals, lags, fitted_params)?,
            normality: normality_test(residuals)?,
            qq: qq_points(residuals)?,
        })
    }
}

/// Diagnostics or the reason they could not be computed (an exact fit has
/// zero-variance residuals, for instance).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsOutcome {
    pub result: Option<Diagnostics>,
    pub error: Option<String>,
}

impl DiagnosticsOutcome {
    fn of(residuals: &[f64], fitted_params: usize) -> Self {
        match Diagnostics::compute(residuals, fitted_params) {
            Ok(d) => Self {
                result: Some(d),
                error: None,
            },
            Err(e) => Self {
                result: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedPoint {
    pub month: MonthDate,
    pub actual: f64,
    pub fitted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualPoint {
    pub month: MonthDate,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArSummary {
    pub order: usize,
    pub phi: Vec<f64>,
    pub intercept: f64,
    pub innovation_variance: f64,
    pub aic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub schema_version: &'static str,
    pub region: String,
    pub requested: ModelRequest,
    pub model: ModelKind,
    pub label: String,
    pub base_selection: Option<BaseSelection>,
    pub ar: Option<ArSummary>,
    pub coefficients: Vec<Coefficient>,
    pub sigma2: f64,
    pub log_offset: Option<f64>,
    pub metrics: MetricSet,
    pub fitted_series: Vec<FittedPoint>,
    /// Working-scale residuals (log scale for the log model; AR innovations
    /// for the corrected model).
    pub residual_series: Vec<ResidualPoint>,
    pub diagnostics: DiagnosticsOutcome,
    /// Diagnostics of the uncorrected base residuals, for the corrected model.
    pub base_diagnostics: Option<DiagnosticsOutcome>,
}

impl FitReport {
    pub fn from_model(
        series: &MonthlySeries,
        model: &FittedModel,
        requested: ModelRequest,
        base_selection: Option<BaseSelection>,
    ) -> Result<FitReport> {
        let metrics = MetricSet::in_sample(model, series)?;
        let months: Vec<MonthDate> = model.effective_months().collect();
        let fitted_series = months
            .iter()
            .zip(model.actuals(series))
            .zip(&model.fitted)
            .map(|((m, a), f)| FittedPoint {
                month: *m,
                actual: *a,
                fitted: *f,
            })
            .collect();
        let residual_series = months
            .iter()
            .zip(&model.residuals)
            .map(|(m, r)| ResidualPoint {
                month: *m,
                residual: *r,
            })
            .collect();
        let ar_order = model.ar_part.as_ref().map_or(0, |a| a.order);
        Ok(FitReport {
            schema_version: SCHEMA_VERSION,
            region: series.region().to_string(),
            requested,
            model: model.kind,
            label: model.kind.label(),
            base_selection,
            ar: model.ar_part.as_ref().map(|a| ArSummary {
                order: a.order,
                phi: a.phi.clone(),
                intercept: a.intercept,
                innovation_variance: a.innovation_variance,
                aic: a.aic,
            }),
            coefficients: model.coefficients.clone(),
            sigma2: model.sigma2,
            log_offset: model.log_transform.map(|lt| lt.offset),
            metrics,
            fitted_series,
            residual_series,
            diagnostics: DiagnosticsOutcome::of(&model.residuals, ar_order),
            base_diagnostics: model
                .base_model()
                .map(|b| DiagnosticsOutcome::of(&b.residuals, 0)),
        })
    }
}

pub fn build_fit_report(
    series: &MonthlySeries,
    request: ModelRequest,
    config: &RollingConfig,
) -> Result<FitReport> {
    let (kind, base_selection) = resolve_model(series, request, config)?;
    let model = fit_model(series, kind, &config.fit)?;
    FitReport::from_model(series, &model, request, base_selection)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastPoint {
    pub month: MonthDate,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastReport {
    pub schema_version: &'static str,
    pub region: String,
    pub requested: ModelRequest,
    pub model: ModelKind,
    pub base_selection: Option<BaseSelection>,
    pub horizon: usize,
    pub forecast: Vec<ForecastPoint>,
}

pub fn build_forecast_report(
    series: &MonthlySeries,
    request: ModelRequest,
    horizon: usize,
    config: &RollingConfig,
) -> Result<ForecastReport> {
    let (kind, base_selection) = resolve_model(series, request, config)?;
    let model = fit_model(series, kind, &config.fit)?;
    let fc = forecast(&model, series, horizon)?;
    Ok(ForecastReport {
        schema_version: SCHEMA_VERSION,
        region: series.region().to_string(),
        requested: request,
        model: kind,
        base_selection,
        horizon,
        forecast: fc
            .months
            .iter()
            .zip(&fc.point)
            .map(|(m, v)| ForecastPoint {
                month: *m,
                value: *v,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollingReport {
    pub schema_version: &'static str,
    pub region: String,
    pub config: RollingConfig,
    pub requested: ModelRequest,
    pub base_selection: Option<BaseSelection>,
    pub result: RollingResult,
}

pub fn build_rolling_report(
    series: &MonthlySeries,
    request: ModelRequest,
    config: &RollingConfig,
) -> Result<RollingReport> {
    let (kind, base_selection) = resolve_model(series, request, config)?;
    Ok(RollingReport {
        schema_version: SCHEMA_VERSION,
        region: series.region().to_string(),
        config: *config,
        requested: request,
        base_selection,
        result: rolling_forecast(series, kind, config)?,
    })
}

/// Rolling results for all five models together with the selection verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollingAllReport {
    pub schema_version: &'static str,
    pub region: String,
    pub config: RollingConfig,
    pub results: Vec<CandidateOutcome>,
    pub selection: SelectionReport,
}

pub fn build_rolling_all_report(
    series: &MonthlySeries,
    config: &RollingConfig,
) -> Result<RollingAllReport> {
    let selection = select_model(series, config)?;
    Ok(RollingAllReport {
        schema_version: SCHEMA_VERSION,
        region: series.region().to_string(),
        config: *config,
        results: selection.all_outcomes().cloned().collect(),
        selection,
    })
}

/// What a rolling evaluation covers: one model, or all five with selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RollingTarget {
    Model(ModelRequest),
    All,
}

impl fmt::Display for RollingTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RollingTarget::Model(m) => m.fmt(f),
            RollingTarget::All => f.write_str("all"),
        }
    }
}

impl FromStr for RollingTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            Ok(RollingTarget::All)
        } else {
            s.parse().map(RollingTarget::Model)
        }
    }
}

impl<'de> Deserialize<'de> for RollingTarget {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Runs a rolling evaluation and serializes the report.
pub fn rolling_json(series: &MonthlySeries, target: RollingTarget, config: &RollingConfig) -> Result<String> {
    match target {
        RollingTarget::Model(m) => build_rolling_report(series, m, config).map(|r| to_json(&r)),
        RollingTarget::All => build_rolling_all_report(series, config).map(|r| to_json(&r)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorInfo {
    pub code: &'static str,
    pub category: ErrorCategory,
    pub message: String,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        ErrorInfo {
            code: e.code(),
            category: e.category(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionOutcome {
    pub report: Option<SelectionReport>,
    pub error: Option<ErrorInfo>,
}

/// Everything needed to rerun a selection bundle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub data_sha256: Option<String>,
    pub regions: Vec<String>,
    pub rolling: RollingConfig,
}

/// Selection results for several regions. Timestamps are deliberately
/// absent so that identical inputs serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub schema_version: &'static str,
    pub config_echo: ConfigEcho,
    pub per_region: BTreeMap<String, RegionOutcome>,
}

impl ReportBundle {
    pub fn build(regions: &[&MonthlySeries], config: &RollingConfig, data_sha256: Option<String>) -> Self {
        let outcomes = config.execution.map(regions, |s| select_model(s, config));
        let per_region = regions
            .iter()
            .zip(outcomes)
            .map(|(s, r)| {
                let outcome = match r {
                    Ok(report) => RegionOutcome {
                        report: Some(report),
                        error: None,
                    },
                    Err(e) => RegionOutcome {
                        report: None,
                        error: Some(ErrorInfo::from(&e)),
                    },
                };
                (s.region().to_string(), outcome)
            })
            .collect();
        ReportBundle {
            schema_version: SCHEMA_VERSION,
            config_echo: ConfigEcho {
                data_sha256,
                regions: regions.iter().map(|s| s.region().to_string()).collect(),
                rolling: *config,
            },
            per_region,
        }
    }

    pub fn succeeded(&self) -> usize {
        self.per_region.values().filter(|o| o.report.is_some()).count()
    }
}

/// Rows of the model-comparison tables.
pub mod tables {
    use super::*;

    /// In-sample RMSE and MAPE per region and model.
    pub struct InSampleRow<'a> {
        pub region: &'a str,
        pub model: ModelKind,
        pub rmse: Option<f64>,
        pub mape: Option<f64>,
    }

    pub fn in_sample_rows(bundle: &ReportBundle) -> Vec<InSampleRow<'_>> {
        bundle
            .per_region
            .iter()
            .filter_map(|(region, o)| o.report.as_ref().map(|r| (region, r)))
            .flat_map(|(region, r)| {
                r.in_sample.iter().map(move |e| InSampleRow {
                    region,
                    model: e.model,
                    rmse: e.metrics.as_ref().map(|m| m.rmse),
                    mape: e.metrics.as_ref().and_then(|m| m.mape),
                })
            })
            .collect()
    }

    /// Per-window rolling MAPE per region and model.
    pub struct WindowRow<'a> {
        pub region: &'a str,
        pub model: ModelKind,
        pub window_mapes: Vec<Option<f64>>,
        pub average: Option<f64>,
    }

    pub fn window_rows(bundle: &ReportBundle) -> Vec<WindowRow<'_>> {
        bundle
            .per_region
            .iter()
            .filter_map(|(region, o)| o.report.as_ref().map(|r| (region, r)))
            .flat_map(|(region, r)| {
                r.all_outcomes().map(move |c| WindowRow {
                    region,
                    model: c.model,
                    window_mapes: c
                        .result
                        .as_ref()
                        .map(|res| res.windows.iter().map(|w| w.mape).collect())
                        .unwrap_or_default(),
                    average: c.average_mape(),
                })
            })
            .collect()
    }

    /// Winning model per region.
    pub struct BestRow<'a> {
        pub region: &'a str,
        pub model: Option<ModelKind>,
        pub average_mape: Option<f64>,
        pub error: Option<&'a str>,
    }

    pub fn best_rows(bundle: &ReportBundle) -> Vec<BestRow<'_>> {
        bundle
            .per_region
            .iter()
            .map(|(region, o)| BestRow {
                region,
                model: o.report.as_ref().map(|r| r.final_choice),
                average_mape: o.report.as_ref().map(|r| r.final_average_mape),
                error: o.error.as_ref().map(|e| e.message.as_str()),
            })
            .collect()
    }
}

/// Pretty JSON with a trailing newline; the canonical form for output files
/// and HTTP bodies.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::BaseKind;

    fn seasonal(n: usize) -> MonthlySeries {
        let values = (0..n)
            .map(|i| {
                let m = (i % 12) as f64;
                100.0 + 20.0 * (m * 0.5).sin() + i as f64 + ((i * 7919) % 13) as f64
            })
            .collect();
        MonthlySeries::new("R", MonthDate::new(2018, 1).unwrap(), values).unwrap()
    }

    #[test]
    fn model_request_names() {
        assert_eq!("ar-corrected".parse::<ModelRequest>().unwrap(), ModelRequest::AutoArCorrected);
        assert_eq!(
            "ar-corrected:log".parse::<ModelRequest>().unwrap(),
            ModelRequest::Kind(ModelKind::ArCorrected(BaseKind::LogTransformed))
        );
        assert!("arima".parse::<ModelRequest>().is_err());
        for s in ["poly-season", "log", "lag-trend", "lag-poly", "ar-corrected", "ar-corrected:lag-poly"] {
            assert_eq!(s.parse::<ModelRequest>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn poly_season_report_has_fourteen_coefficients() {
        let s = seasonal(48);
        let r = build_fit_report(&s, "poly-season".parse().unwrap(), &RollingConfig::default()).unwrap();
        assert_eq!(r.coefficients.len(), 14);
        assert_eq!(r.fitted_series.len(), 48);
        assert!(r.diagnostics.result.is_some());
        assert!(r.base_diagnostics.is_none());
    }

    #[test]
    fn auto_corrected_reports_base_and_order() {
        let s = seasonal(48);
        let r = build_fit_report(&s, ModelRequest::AutoArCorrected, &RollingConfig::default()).unwrap();
        let sel = r.base_selection.as_ref().unwrap();
        assert_eq!(r.model, ModelKind::ArCorrected(sel.chosen.base()));
        assert_eq!(sel.candidates.len(), 4);
        assert!(r.ar.is_some());
        assert!(r.base_diagnostics.is_some());
    }

    #[test]
    fn bundle_json_is_deterministic() {
        let a = seasonal(48);
        let b = MonthlySeries::new("Q", a.start(), vec![3.0; 20]).unwrap();
        let cfg = RollingConfig::default();
        let one = to_json(&ReportBundle::build(&[&a, &b], &cfg, None));
        let two = to_json(&ReportBundle::build(&[&a, &b], &cfg, None));
        assert_eq!(one, two);
        let bundle = ReportBundle::build(&[&a, &b], &cfg, None);
        assert_eq!(bundle.succeeded(), 1);
        assert_eq!(bundle.per_region["Q"].error.as_ref().unwrap().code, "insufficient-data");
        assert_eq!(tables::best_rows(&bundle).len(), 2);
        assert_eq!(tables::window_rows(&bundle).len(), 5);
        assert_eq!(tables::in_sample_rows(&bundle).len(), 5);
    }
}
