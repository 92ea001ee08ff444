//! Plain-text reports and plot-data CSVs.

use std::fmt::Write;

use epiforecast_core::report::{
    tables, DiagnosticsOutcome, FitReport, ForecastReport, ReportBundle, RollingAllReport,
    RollingReport,
};
use epiforecast_core::selection::CandidateOutcome;
use epiforecast_core::RollingResult;

use crate::output::csv_field;

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.2}%", 100.0 * x))
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

fn diagnostics_block(out: &mut String, title: &str, d: &DiagnosticsOutcome) {
    writeln!(out, "{title}").unwrap();
    let Some(d) = &d.result else {
        writeln!(out, "  unavailable: {}", d.error.as_deref().unwrap_or("unknown")).unwrap();
        return;
    };
    let lb = &d.ljung_box;
    writeln!(
        out,
        "  Ljung-Box    Q = {:.4}  lags = {}  dof = {}  p = {:.4}",
        lb.statistic, lb.lags_used, lb.dof, lb.p_value
    )
    .unwrap();
    let nt = &d.normality;
    writeln!(
        out,
        "  {:<12} JB = {:.4}  p = {:.4}  skew = {:.4}  excess kurtosis = {:.4}",
        "Jarque-Bera", nt.statistic, nt.p_value, nt.skewness, nt.excess_kurtosis
    )
    .unwrap();
    writeln!(out, "  {:>4}  {:>8}  {:>8}", "lag", "ACF", "PACF").unwrap();
    for (i, lag) in d.pacf.lags.iter().enumerate() {
        writeln!(
            out,
            "  {:>4}  {:>8.4}  {:>8.4}",
            lag, d.acf.values[*lag], d.pacf.values[i]
        )
        .unwrap();
    }
    writeln!(out, "  band  +/-{:.4}", d.acf.confidence_band).unwrap();
}

pub fn fit_text(r: &FitReport) -> String {
    let mut out = String::new();
    let first = r.fitted_series.first().map(|p| p.month);
    let last = r.fitted_series.last().map(|p| p.month);
    writeln!(out, "Region: {}", r.region).unwrap();
    writeln!(out, "Model:  {} ({})", r.model, r.label).unwrap();
    if let (Some(a), Some(b)) = (first, last) {
        writeln!(out, "Sample: {a}..{b} ({} months)", r.fitted_series.len()).unwrap();
    }
    if let Some(sel) = &r.base_selection {
        writeln!(out, "Base chosen by rolling MAPE: {}", sel.chosen).unwrap();
        for c in &sel.candidates {
            writeln!(out, "  {:<12} {}", c.model.to_string(), pct(c.average_mape())).unwrap();
        }
    }
    if let Some(ar) = &r.ar {
        writeln!(out, "AR order: {} (AIC {:.4})", ar.order, ar.aic).unwrap();
    }
    writeln!(out).unwrap();

    writeln!(out, "Coefficients ({})", r.coefficients.len()).unwrap();
    for c in &r.coefficients {
        writeln!(out, "  {:<14} {:>14.6}", c.name, c.value).unwrap();
    }
    writeln!(out, "  {:<14} {:>14.6}", "sigma2", r.sigma2).unwrap();
    writeln!(out).unwrap();

    let m = &r.metrics;
    writeln!(out, "In-sample metrics").unwrap();
    writeln!(out, "  RMSE  {:.4}", m.rmse).unwrap();
    writeln!(out, "  MAPE  {}", pct(m.mape)).unwrap();
    writeln!(out, "  MSE   {:.4}", m.mse).unwrap();
    writeln!(out, "  RSE   {:.4}", m.rse).unwrap();
    if m.n_skipped_zero > 0 {
        writeln!(out, "  ({} zero actuals skipped in MAPE)", m.n_skipped_zero).unwrap();
    }
    writeln!(out).unwrap();

    diagnostics_block(&mut out, "Residual diagnostics", &r.diagnostics);
    if let Some(b) = &r.base_diagnostics {
        writeln!(out).unwrap();
        diagnostics_block(&mut out, "Base-model residual diagnostics", b);
    }
    writeln!(out).unwrap();

    writeln!(out, "Fitted vs actual").unwrap();
    writeln!(out, "  {:<8} {:>12} {:>12} {:>12}", "month", "actual", "fitted", "residual").unwrap();
    for (p, res) in r.fitted_series.iter().zip(&r.residual_series) {
        writeln!(
            out,
            "  {:<8} {:>12.4} {:>12.4} {:>12.4}",
            p.month.to_string(),
            p.actual,
            p.fitted,
            res.residual
        )
        .unwrap();
    }
    out
}

pub fn forecast_text(r: &ForecastReport) -> String {
    let mut out = String::new();
    writeln!(out, "Region: {}", r.region).unwrap();
    writeln!(out, "Model:  {} ({})", r.model, r.model.label()).unwrap();
    writeln!(out).unwrap();
    writeln!(out, "  {:<8} {:>12}", "month", "forecast").unwrap();
    for p in &r.forecast {
        writeln!(out, "  {:<8} {:>12.4}", p.month.to_string(), p.value).unwrap();
    }
    out
}

fn windows_table(out: &mut String, r: &RollingResult) {
    writeln!(out, "  {:>10} {:>8} {:>10}", "train", "test", "MAPE").unwrap();
    for w in &r.windows {
        let mape = w.mape.map_or_else(|| "failed".to_string(), |m| pct(Some(m)));
        writeln!(out, "  {:>10} {:>8} {:>10}", w.train_size, w.horizon, mape).unwrap();
    }
    writeln!(
        out,
        "  average over {} window(s): {}",
        r.windows.len() - r.failed_windows,
        pct(Some(r.average_mape))
    )
    .unwrap();
    for w in r.windows.iter().filter(|w| w.error.is_some()) {
        writeln!(
            out,
            "  window {} failed: {}",
            w.train_size,
            w.error.as_deref().unwrap_or_default()
        )
        .unwrap();
    }
}

pub fn rolling_text(r: &RollingReport) -> String {
    let mut out = String::new();
    writeln!(out, "Region: {}", r.region).unwrap();
    writeln!(
        out,
        "Model:  {} ({})",
        r.result.model,
        r.result.model.label()
    )
    .unwrap();
    writeln!(
        out,
        "Rolling: mode {}, min train {}, horizon {}",
        r.result.mode, r.result.min_train, r.result.horizon
    )
    .unwrap();
    writeln!(out).unwrap();
    windows_table(&mut out, &r.result);
    out
}

pub fn rolling_all_text(r: &RollingAllReport) -> String {
    let mut out = String::new();
    writeln!(out, "Region: {}", r.region).unwrap();
    writeln!(
        out,
        "Rolling: mode {}, min train {}, horizon {}",
        r.config.mode, r.config.min_train, r.config.horizon
    )
    .unwrap();
    for c in &r.results {
        writeln!(out).unwrap();
        writeln!(out, "Model:  {} ({})", c.model, c.model.label()).unwrap();
        match &c.result {
            Some(res) => windows_table(&mut out, res),
            None => writeln!(out, "  failed: {}", c.error.as_deref().unwrap_or("unknown")).unwrap(),
        }
    }
    writeln!(out).unwrap();
    writeln!(
        out,
        "Best model: {} ({})",
        r.selection.final_choice,
        r.selection.final_choice.label()
    )
    .unwrap();
    out
}

pub fn bundle_text(b: &ReportBundle) -> String {
    let mut out = String::new();
    let cfg = &b.config_echo.rolling;
    writeln!(
        out,
        "Rolling: mode {}, min train {}, horizon {}",
        cfg.mode, cfg.min_train, cfg.horizon
    )
    .unwrap();
    writeln!(out).unwrap();

    writeln!(out, "In-sample accuracy").unwrap();
    writeln!(out, "  {:<20} {:<24} {:>12} {:>10}", "region", "model", "RMSE", "MAPE").unwrap();
    for row in tables::in_sample_rows(b) {
        writeln!(
            out,
            "  {:<20} {:<24} {:>12} {:>10}",
            row.region,
            row.model.label(),
            num(row.rmse),
            pct(row.mape)
        )
        .unwrap();
    }
    writeln!(out).unwrap();

    writeln!(out, "Out-of-sample rolling MAPE").unwrap();
    let mut header = format!("  {:<20} {:<24}", "region", "model");
    let width = tables::window_rows(b)
        .iter()
        .map(|r| r.window_mapes.len())
        .max()
        .unwrap_or(0);
    for i in 1..=width {
        write!(header, " {:>9}", format!("MAPE{i}")).unwrap();
    }
    write!(header, " {:>9}", "average").unwrap();
    writeln!(out, "{header}").unwrap();
    for row in tables::window_rows(b) {
        write!(out, "  {:<20} {:<24}", row.region, row.model.label()).unwrap();
        for i in 0..width {
            let cell = match row.window_mapes.get(i) {
                Some(Some(m)) => pct(Some(*m)),
                Some(None) => "failed".to_string(),
                None => "-".to_string(),
            };
            write!(out, " {cell:>9}").unwrap();
        }
        writeln!(out, " {:>9}", pct(row.average)).unwrap();
    }
    writeln!(out).unwrap();

    writeln!(out, "Best model per region").unwrap();
    for row in tables::best_rows(b) {
        match (row.model, row.error) {
            (Some(m), _) => writeln!(
                out,
                "  {:<20} {:<24} {:>10}",
                row.region,
                m.label(),
                pct(row.average_mape)
            ),
            (None, e) => writeln!(out, "  {:<20} failed: {}", row.region, e.unwrap_or("unknown")),
        }
        .unwrap();
    }
    out
}

/// `month,actual,fitted,residual` for the actual-vs-fitted plot.
pub fn fitted_csv(r: &FitReport) -> String {
    let mut out = String::from("month,actual,fitted,residual\n");
    for (p, res) in r.fitted_series.iter().zip(&r.residual_series) {
        writeln!(out, "{},{},{},{}", p.month, p.actual, p.fitted, res.residual).unwrap();
    }
    out
}

fn push_rolling_rows(out: &mut String, region: &str, c: &CandidateOutcome) {
    if let Some(r) = &c.result {
        for w in &r.windows {
            writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(region),
                c.model,
                w.train_size,
                w.horizon,
                w.mape.map_or_else(String::new, |m| m.to_string())
            )
            .unwrap();
        }
    }
}

const ROLLING_HEADER: &str = "region,model,train_size,horizon,mape\n";

/// Window MAPE per model, for the rolling-MAPE plot.
pub fn rolling_csv(r: &RollingReport) -> String {
    let mut out = String::from(ROLLING_HEADER);
    let c = CandidateOutcome {
        model: r.result.model,
        result: Some(r.result.clone()),
        error: None,
    };
    push_rolling_rows(&mut out, &r.region, &c);
    out
}

pub fn rolling_all_csv(r: &RollingAllReport) -> String {
    let mut out = String::from(ROLLING_HEADER);
    for c in &r.results {
        push_rolling_rows(&mut out, &r.region, c);
    }
    out
}

pub fn bundle_rolling_csv(b: &ReportBundle) -> String {
    let mut out = String::from(ROLLING_HEADER);
    for (region, o) in &b.per_region {
        if let Some(rep) = &o.report {
            for c in rep.all_outcomes() {
                push_rolling_rows(&mut out, region, c);
            }
        }
    }
    out
}
