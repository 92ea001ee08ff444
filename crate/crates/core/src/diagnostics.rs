//! Residual diagnostics: ACF/PACF, Ljung-Box, Jarque-Bera and Q-Q data.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{chi_square_sf, normal_quantile};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfResult {
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    /// `1.96 / sqrt(n)`
    pub confidence_band: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LjungBoxResult {
    pub statistic: f64,
    pub lags_used: usize,
    pub dof: usize,
    pub p_value: f64,
}

impl LjungBoxResult {
    pub fn is_white_noise(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: &'static str,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QqPoint {
    pub theoretical: f64,
    pub sample: f64,
}

/// `min(10, n / 5)`, at least 1.
pub fn default_ljung_box_lags(n: usize) -> usize {
    (n / 5).clamp(1, 10)
}

fn check_lag_args(x: &[f64], max_lag: usize) -> Result<()> {
    if max_lag < 1 {
        return Err(Error::Validation("max_lag must be at least 1".into()));
    }
    if x.len() < max_lag + 1 {
        return Err(Error::InsufficientData {
            needed: max_lag + 1,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("residuals contain non-finite values".into()));
    }
    Ok(())
}

/// Autocorrelations `r_0..r_max_lag` with the biased (full-sample) denominator.
fn autocorrelations(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::Degenerate("series has zero variance".into()));
    }
    let mut r = Vec::with_capacity(max_lag + 1);
    r.push(1.0);
    for k in 1..=max_lag {
        let num: f64 = dev[k..].iter().zip(&dev).map(|(a, b)| a * b).sum();
        r.push(num / denom);
    }
    Ok(r)
}

pub fn acf(residuals: &[f64], max_lag: usize) -> Result<AcfResult> {
    check_lag_args(residuals, max_lag)?;
    let values = autocorrelations(residuals, max_lag)?;
    Ok(AcfResult {
        lags: (0..=max_lag).collect(),
        values,
        confidence_band: 1.96 / (residuals.len() as f64).sqrt(),
    })
}

/// Partial autocorrelations at lags `1..=max_lag` (Durbin-Levinson).
pub fn pacf(residuals: &[f64], max_lag: usize) -> Result<AcfResult> {
    check_lag_args(residuals, max_lag)?;
    let r = autocorrelations(residuals, max_lag)?;
    let mut out = Vec::with_capacity(max_lag);
    let mut phi: Vec<f64> = Vec::new();
    for k in 1..=max_lag {
        let num = r[k] - phi.iter().enumerate().map(|(j, p)| p * r[k - 1 - j]).sum::<f64>();
        let den = 1.0 - phi.iter().enumerate().map(|(j, p)| p * r[j + 1]).sum::<f64>();
        let pkk = if den.abs() < f64::EPSILON { 0.0 } else { num / den };
        let prev = phi.clone();
        for j in 0..phi.len() {
            phi[j] = prev[j] - pkk * prev[prev.len() - 1 - j];
        }
        phi.push(pkk);
        out.push(pkk);
    }
    Ok(AcfResult {
        lags: (1..=max_lag).collect(),
        values: out,
        confidence_band: 1.96 / (residuals.len() as f64).sqrt(),
    })
}

/// Ljung-Box portmanteau test with `dof = max(1, lags - fitted_params)`.
pub fn ljung_box(residuals: &[f64], lags: usize, fitted_params: usize) -> Result<LjungBoxResult> {
    if lags < 1 {
        return Err(Error::Validation("lags must be at least 1".into()));
    }
    if residuals.len() <= lags {
        return Err(Error::InsufficientData {
            needed: lags + 1,
            got: residuals.len(),
        });
    }
    let r = autocorrelations(residuals, lags)?;
    let n = residuals.len() as f64;
    let statistic = n
        * (n + 2.0)
        * (1..=lags)
            .map(|k| r[k] * r[k] / (n - k as f64))
            .sum::<f64>();
    let dof = lags.saturating_sub(fitted_params).max(1);
    Ok(LjungBoxResult {
        statistic,
        lags_used: lags,
        dof,
        p_value: chi_square_sf(statistic, dof as f64),
    })
}

/// Jarque-Bera test: `n (S²/6 + (K - 3)²/24)` against χ²(2).
pub fn normality_test(residuals: &[f64]) -> Result<NormalityResult> {
    if residuals.len() < 8 {
        return Err(Error::InsufficientData {
            needed: 8,
            got: residuals.len(),
        });
    }
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in residuals {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 == 0.0 || !m2.is_finite() {
        return Err(Error::Degenerate("residuals have zero variance".into()));
    }
    let skewness = m3 / m2.powf(1.5);
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;
    let statistic = n * (skewness * skewness / 6.0 + excess_kurtosis * excess_kurtosis / 24.0);
    Ok(NormalityResult {
        statistic,
        p_value: chi_square_sf(statistic, 2.0),
        method: "jarque-bera",
        skewness,
        excess_kurtosis,
    })
}

/// Sorted residuals against normal quantiles at `(i - 0.5) / n`.
pub fn qq_points(residuals: &[f64]) -> Result<Vec<QqPoint>> {
    if residuals.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: residuals.len(),
        });
    }
    let mut sorted = residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, sample)| QqPoint {
            theoretical: normal_quantile((i as f64 + 0.5) / n),
            sample,
        })
        .collect())
}
