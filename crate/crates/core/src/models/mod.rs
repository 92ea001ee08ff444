//! The four regression model families and their AR error-corrected variant.
//!
//! | kind            | response             | regressors                          | sample     |
//! |-----------------|----------------------|-------------------------------------|------------|
//! | `PolySeason`    | `y`                  | 12 month intercepts, `t`, `t²`      | all rows   |
//! | `LogTransformed`| `ln(y + offset)`     | 12 month intercepts, `t`, `t²`      | all rows   |
//! | `LagTrend`      | `y - y[t-12]`        | intercept, `t`, `t²`                | rows 13..n |
//! | `LagPolyTrend`  | `y`                  | intercept, `y[t-12]`, `t`, `t²`     | rows 13..n |
//!
//! `t` is the standardized position `1..n` of the training series; the map
//! is stored with the fit and reused for forecasting.

mod ar;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use ar::{default_max_order, fit_ar, fit_ar_on_residuals, ArModel};

use crate::error::{Error, Result};
use crate::ols::{fit_ols, OlsFit};
use crate::series::{dummies_for, poly_for, DesignMatrix, MonthDate, MonthlySeries, TimeScaling};

/// Minimum training length for every model.
pub const MIN_OBSERVATIONS: usize = 36;

const SEASON: usize = 12;
const TREND_DEGREE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseKind {
    PolySeason,
    LogTransformed,
    LagTrend,
    LagPolyTrend,
}

impl BaseKind {
    pub const ALL: [BaseKind; 4] = [
        BaseKind::PolySeason,
        BaseKind::LogTransformed,
        BaseKind::LagTrend,
        BaseKind::LagPolyTrend,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseKind::PolySeason => "poly-season",
            BaseKind::LogTransformed => "log",
            BaseKind::LagTrend => "lag-trend",
            BaseKind::LagPolyTrend => "lag-poly",
        }
    }

    fn uses_lag(self) -> bool {
        matches!(self, BaseKind::LagTrend | BaseKind::LagPolyTrend)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    PolySeason,
    LogTransformed,
    LagTrend,
    LagPolyTrend,
    ArCorrected(BaseKind),
}

impl From<BaseKind> for ModelKind {
    fn from(b: BaseKind) -> Self {
        match b {
            BaseKind::PolySeason => ModelKind::PolySeason,
            BaseKind::LogTransformed => ModelKind::LogTransformed,
            BaseKind::LagTrend => ModelKind::LagTrend,
            BaseKind::LagPolyTrend => ModelKind::LagPolyTrend,
        }
    }
}

impl ModelKind {
    pub fn base(self) -> BaseKind {
        match self {
            ModelKind::PolySeason => BaseKind::PolySeason,
            ModelKind::LogTransformed => BaseKind::LogTransformed,
            ModelKind::LagTrend => BaseKind::LagTrend,
            ModelKind::LagPolyTrend => BaseKind::LagPolyTrend,
            ModelKind::ArCorrected(b) => b,
        }
    }

    /// 1..=5, the order used for tie-breaking.
    pub fn number(self) -> u8 {
        match self {
            ModelKind::PolySeason => 1,
            ModelKind::LogTransformed => 2,
            ModelKind::LagTrend => 3,
            ModelKind::LagPolyTrend => 4,
            ModelKind::ArCorrected(_) => 5,
        }
    }

    pub fn is_ar_corrected(self) -> bool {
        matches!(self, ModelKind::ArCorrected(_))
    }

    /// Table label.
    pub fn label(self) -> String {
        match self {
            ModelKind::PolySeason => "Poly + Season".into(),
            ModelKind::LogTransformed => "Log Transformed".into(),
            ModelKind::LagTrend => "Lag + Trend".into(),
            ModelKind::LagPolyTrend => "Lag + Poly Trend".into(),
            ModelKind::ArCorrected(b) => format!("ARIMA ({})", ModelKind::from(b).label()),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::ArCorrected(b) => write!(f, "ar-corrected:{}", b.name()),
            other => f.write_str(other.base().name()),
        }
    }
}

impl FromStr for BaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaseKind::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "unknown model '{s}' (expected poly-season, log, lag-trend, lag-poly or ar-corrected:<base>)"
                ))
            })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    /// Accepts the base names and `ar-corrected:<base>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("ar-corrected", base)) => Ok(ModelKind::ArCorrected(base.parse()?)),
            _ => s.parse::<BaseKind>().map(ModelKind::from),
        }
    }
}

impl Serialize for ModelKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Options that change how a model is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Added before taking logs in the log model. Zero means strict: any
    /// zero count is an error.
    pub log_offset: f64,
    /// Largest AR order considered; `None` uses `min(10, n_residuals / 5)`.
    pub ar_max_order: Option<usize>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            log_offset: 1.0,
            ar_max_order: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub value: f64,
}

/// A fitted model. `residuals` are on the working scale (log scale for the
/// log model); `fitted` is always on the count scale. Both cover rows
/// `effective_range.0..=effective_range.1` of the training series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedModel {
    pub kind: ModelKind,
    pub coefficients: Vec<Coefficient>,
    /// OLS residual variance `RSS / (n - k)`, or the AR innovation variance
    /// for the corrected model.
    pub sigma2: f64,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    pub effective_range: (usize, usize),
    pub ar_part: Option<ArModel>,
    pub time_scaling: TimeScaling,
    /// Offset and variance used by the log back-transform.
    pub log_transform: Option<LogTransform>,
    pub train_start: MonthDate,
    pub train_len: usize,
    #[serde(skip)]
    working_fitted: Vec<f64>,
    #[serde(skip)]
    base: Option<Box<FittedModel>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogTransform {
    pub offset: f64,
    /// Log-scale residual variance entering `exp(mu + variance / 2)`.
    pub variance: f64,
}

impl LogTransform {
    /// `max(exp(mu + variance / 2) - offset, 0)`
    pub fn back_transform(&self, mu: f64) -> f64 {
        ((mu + 0.5 * self.variance).exp() - self.offset).max(0.0)
    }
}

impl FittedModel {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficients
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.value)
    }

    pub fn n_params(&self) -> usize {
        self.coefficients.len()
    }

    pub fn base_model(&self) -> Option<&FittedModel> {
        self.base.as_deref()
    }

    /// Observed values over the effective sample.
    pub fn actuals<'a>(&self, series: &'a MonthlySeries) -> &'a [f64] {
        &series.values()[self.effective_range.0..=self.effective_range.1]
    }

    pub fn effective_months(&self) -> impl Iterator<Item = MonthDate> + '_ {
        (self.effective_range.0..=self.effective_range.1)
            .map(move |i| self.train_start.add_months(i as i64))
    }

    fn to_count(&self, working: f64) -> f64 {
        match &self.log_transform {
            Some(lt) => lt.back_transform(working),
            None => working,
        }
    }
}

fn require_length(series: &MonthlySeries) -> Result<()> {
    if series.len() < MIN_OBSERVATIONS {
        return Err(Error::InsufficientData {
            needed: MIN_OBSERVATIONS,
            got: series.len(),
        });
    }
    Ok(())
}

fn coefficients_of(fit: &OlsFit) -> Vec<Coefficient> {
    fit.names
        .iter()
        .zip(&fit.coefficients)
        .map(|(name, value)| Coefficient {
            name: name.clone(),
            value: *value,
        })
        .collect()
}

fn season_trend_design(series: &MonthlySeries, scaling: &TimeScaling) -> Result<DesignMatrix> {
    let n = series.len();
    dummies_for(series.months(), n).with(poly_for(1..=n, n, TREND_DEGREE, scaling))
}

fn lag_trend_design(
    series: &MonthlySeries,
    scaling: &TimeScaling,
    with_lag: bool,
) -> Result<DesignMatrix> {
    let n = series.len();
    let rows = n - SEASON;
    let mut d = DesignMatrix::new(rows);
    d.push("intercept", vec![1.0; rows])?;
    if with_lag {
        d.push("lag12", series.values()[..rows].to_vec())?;
    }
    d.with(poly_for(SEASON + 1..=n, rows, TREND_DEGREE, scaling))
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    kind: ModelKind,
    series: &MonthlySeries,
    fit: OlsFit,
    working_fitted: Vec<f64>,
    fitted: Vec<f64>,
    first_row: usize,
    scaling: TimeScaling,
    log_transform: Option<LogTransform>,
) -> FittedModel {
    FittedModel {
        kind,
        coefficients: coefficients_of(&fit),
        sigma2: fit.sigma2,
        residuals: fit.residuals,
        fitted,
        effective_range: (first_row, series.len() - 1),
        ar_part: None,
        time_scaling: scaling,
        log_transform,
        train_start: series.start(),
        train_len: series.len(),
        working_fitted,
        base: None,
    }
}

/// Raw counts on month intercepts and a quadratic trend.
pub fn fit_poly_season(series: &MonthlySeries) -> Result<FittedModel> {
    fit_base(series, BaseKind::PolySeason, &FitOptions::default())
}

/// Log counts on month intercepts and a quadratic trend, back-transformed
/// with the lognormal mean correction.
pub fn fit_log_transformed(series: &MonthlySeries, log_offset: f64) -> Result<FittedModel> {
    let options = FitOptions {
        log_offset,
        ..FitOptions::default()
    };
    fit_base(series, BaseKind::LogTransformed, &options)
}

/// `y[t] - y[t-12]` on an intercept and a quadratic trend.
pub fn fit_lag_trend(series: &MonthlySeries) -> Result<FittedModel> {
    fit_base(series, BaseKind::LagTrend, &FitOptions::default())
}

/// `y[t]` on an intercept, `y[t-12]` and a quadratic trend.
pub fn fit_lag_poly_trend(series: &MonthlySeries) -> Result<FittedModel> {
    fit_base(series, BaseKind::LagPolyTrend, &FitOptions::default())
}

pub fn fit_base(series: &MonthlySeries, kind: BaseKind, options: &FitOptions) -> Result<FittedModel> {
    fit_base_with_scaling(series, kind, options, TimeScaling::standardized(series.len()))
}

/// As [`fit_base`] with an explicit time map. Fitted values do not depend
/// on the (affine) choice; coefficients do.
pub fn fit_base_with_scaling(
    series: &MonthlySeries,
    kind: BaseKind,
    options: &FitOptions,
    scaling: TimeScaling,
) -> Result<FittedModel> {
    require_length(series)?;
    let v = series.values();
    match kind {
        BaseKind::PolySeason => {
            let fit = fit_ols(&season_trend_design(series, &scaling)?, v)?;
            let fitted = fit.fitted.clone();
            Ok(assemble(ModelKind::PolySeason, series, fit, fitted.clone(), fitted, 0, scaling, None))
        }
        BaseKind::LogTransformed => {
            let offset = options.log_offset;
            if !(offset.is_finite() && offset >= 0.0) {
                return Err(Error::Validation(format!(
                    "log offset must be finite and non-negative, got {offset}"
                )));
            }
            let response = v
                .iter()
                .enumerate()
                .map(|(i, y)| {
                    let shifted = y + offset;
                    if shifted <= 0.0 {
                        Err(Error::NonPositive {
                            month: series.start().add_months(i as i64),
                            value: *y,
                        })
                    } else {
                        Ok(shifted.ln())
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            let fit = fit_ols(&season_trend_design(series, &scaling)?, &response)?;
            let lt = LogTransform {
                offset,
                variance: fit.rss / fit.residuals.len() as f64,
            };
            let mu = fit.fitted.clone();
            let fitted = mu.iter().map(|m| lt.back_transform(*m)).collect();
            Ok(assemble(ModelKind::LogTransformed, series, fit, mu, fitted, 0, scaling, Some(lt)))
        }
        BaseKind::LagTrend => {
            let diff: Vec<f64> = (SEASON..v.len()).map(|t| v[t] - v[t - SEASON]).collect();
            let fit = fit_ols(&lag_trend_design(series, &scaling, false)?, &diff)?;
            let fitted: Vec<f64> = fit.fitted.iter().zip(v).map(|(d, lagged)| lagged + d).collect();
            Ok(assemble(ModelKind::LagTrend, series, fit, fitted.clone(), fitted, SEASON, scaling, None))
        }
        BaseKind::LagPolyTrend => {
            let fit = fit_ols(&lag_trend_design(series, &scaling, true)?, &v[SEASON..])?;
            let fitted = fit.fitted.clone();
            Ok(assemble(ModelKind::LagPolyTrend, series, fit, fitted.clone(), fitted, SEASON, scaling, None))
        }
    }
}

/// Wraps a fitted base model with an AR model of its residuals.
///
/// The in-sample fit adds the one-step AR prediction of each residual to the
/// base fit (on the working scale), so the first `order` rows of the base
/// sample drop out and the stored residuals are the AR innovations.
pub fn with_ar_correction(base: FittedModel, ar: ArModel) -> Result<FittedModel> {
    if base.kind.is_ar_corrected() {
        return Err(Error::Validation("AR correction cannot be nested".into()));
    }
    let p = ar.order;
    let r = &base.residuals;
    let mut working_fitted = Vec::with_capacity(r.len() - p);
    let mut innovations = Vec::with_capacity(r.len() - p);
    for j in p..r.len() {
        let pred = ar.predict_at(r, j);
        working_fitted.push(base.working_fitted[j] + pred);
        innovations.push(r[j] - pred);
    }
    let fitted = working_fitted.iter().map(|w| base.to_count(*w)).collect();

    let mut coefficients = base.coefficients.clone();
    coefficients.push(Coefficient {
        name: "ar_intercept".into(),
        value: ar.intercept,
    });
    coefficients.extend(ar.phi.iter().enumerate().map(|(l, v)| Coefficient {
        name: format!("ar_phi_{}", l + 1),
        value: *v,
    }));

    Ok(FittedModel {
        kind: ModelKind::ArCorrected(base.kind.base()),
        coefficients,
        sigma2: ar.innovation_variance,
        residuals: innovations,
        fitted,
        effective_range: (base.effective_range.0 + p, base.effective_range.1),
        ar_part: Some(ar),
        time_scaling: base.time_scaling,
        log_transform: base.log_transform,
        train_start: base.train_start,
        train_len: base.train_len,
        working_fitted,
        base: Some(Box::new(base)),
    })
}

pub fn fit_ar_corrected(
    series: &MonthlySeries,
    base: BaseKind,
    options: &FitOptions,
) -> Result<FittedModel> {
    let base = fit_base(series, base, options)?;
    let max_order = options
        .ar_max_order
        .unwrap_or_else(|| default_max_order(base.residuals.len()));
    let ar = fit_ar_on_residuals(&base, max_order)?;
    with_ar_correction(base, ar)
}

pub fn fit_model(series: &MonthlySeries, kind: ModelKind, options: &FitOptions) -> Result<FittedModel> {
    match kind {
        ModelKind::ArCorrected(base) => fit_ar_corrected(series, base, options),
        other => fit_base(series, other.base(), options),
    }
}

/// Point forecasts on the count scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastResult {
    pub horizon: usize,
    pub months: Vec<MonthDate>,
    pub point: Vec<f64>,
    pub model: ModelKind,
}

/// Forecasts `horizon` months past the end of `series`, which must be the
/// series the model was trained on.
///
/// Lag-12 models use observed values while they exist and their own earlier
/// forecasts beyond twelve steps. The AR part contributes its iterated
/// residual forecast on the working scale.
pub fn forecast(model: &FittedModel, series: &MonthlySeries, horizon: usize) -> Result<ForecastResult> {
    if horizon < 1 {
        return Err(Error::Validation("horizon must be at least 1".into()));
    }
    if series.len() != model.train_len || series.start() != model.train_start {
        return Err(Error::Validation(format!(
            "series {}..{} does not match the training series of the model",
            series.start(),
            series.end()
        )));
    }
    let (base, correction) = match (&model.base, &model.ar_part) {
        (Some(base), Some(ar)) => (
            base.as_ref(),
            ar.forecast_path(&base.residuals, horizon),
        ),
        _ => (model, vec![0.0; horizon]),
    };

    let n = series.len();
    let mut path: Vec<f64> = series.values().to_vec();
    let mut point = Vec::with_capacity(horizon);
    for (h, corr) in (1..=horizon).zip(&correction) {
        let t = n + h;
        let working = base_working_value(base, series.start(), &path, t)? + corr;
        let value = model.to_count(working);
        if !value.is_finite() {
            return Err(Error::Degenerate(format!(
                "forecast at step {h} is not finite"
            )));
        }
        path.push(value);
        point.push(value);
    }
    Ok(ForecastResult {
        horizon,
        months: (1..=horizon)
            .map(|h| series.end().add_months(h as i64))
            .collect(),
        point,
        model: model.kind,
    })
}

/// Working-scale mean of the base model at raw time `t` (1-based), given
/// the observed-then-forecast path for lag lookups.
fn base_working_value(base: &FittedModel, start: MonthDate, path: &[f64], t: usize) -> Result<f64> {
    let c = |name: &str| {
        base.coefficient(name)
            .ok_or_else(|| Error::Validation(format!("model lacks coefficient '{name}'")))
    };
    let s = base.time_scaling.apply(t);
    let trend = c("t")? * s + c("t2")? * s * s;
    let kind = base.kind.base();
    if kind.uses_lag() {
        let lagged = path[t - 1 - SEASON];
        let intercept = c("intercept")?;
        Ok(match kind {
            BaseKind::LagTrend => lagged + intercept + trend,
            _ => intercept + c("lag12")? * lagged + trend,
        })
    } else {
        let month = start.add_months(t as i64 - 1).month();
        Ok(c(&crate::series::dummy_name(month))? + trend)
    }
}
