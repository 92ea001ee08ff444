//! Least squares via Householder QR.
//!
//! The normal matrix is never formed. Columns whose component orthogonal to
//! the preceding columns is negligible are reported as linearly dependent.

use crate::error::{Error, Result};
use crate::series::DesignMatrix;

/// Relative threshold on the orthogonal remainder of a column.
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    /// `rss / (n - k)`, zero when the fit has no residual degrees of freedom.
    pub sigma2: f64,
}

impl OlsFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.coefficients[i])
    }

    pub fn dof(&self) -> usize {
        self.residuals.len() - self.coefficients.len()
    }
}

pub fn fit_ols(design: &DesignMatrix, response: &[f64]) -> Result<OlsFit> {
    let n = design.rows();
    let k = design.cols();
    if response.len() != n {
        return Err(Error::Validation(format!(
            "response has {} rows, design has {n}",
            response.len()
        )));
    }
    if k == 0 {
        return Err(Error::Validation("design has no columns".into()));
    }
    if n < k {
        return Err(Error::InsufficientData { needed: k, got: n });
    }
    if response.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("response contains non-finite values".into()));
    }

    let mut a: Vec<Vec<f64>> = design.columns().iter().map(|c| c.values.clone()).collect();
    if a.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Validation("design contains non-finite values".into()));
    }
    let norms: Vec<f64> = a.iter().map(|c| norm(c)).collect();
    let mut qty = response.to_vec();
    let mut dependent = Vec::new();

    let mut rank = 0;
    for j in 0..k {
        let alpha = norm(&a[j][rank..]);
        if norms[j] == 0.0 || alpha <= RANK_TOL * norms[j] {
            dependent.push(design.columns()[j].name.clone());
            continue;
        }
        // Reflector v = x + sign(x0)·‖x‖·e0, applied as H = I - 2vvᵀ/vᵀv.
        let sign = if a[j][rank] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = a[j][rank..].to_vec();
        v[0] += sign * alpha;
        let vtv = dot(&v, &v);
        for col in a[j..].iter_mut() {
            reflect(&v, vtv, &mut col[rank..]);
        }
        reflect(&v, vtv, &mut qty[rank..]);
        rank += 1;
    }
    if !dependent.is_empty() {
        return Err(Error::SingularDesign { columns: dependent });
    }

    let mut beta = vec![0.0; k];
    for j in (0..k).rev() {
        let mut s = qty[j];
        for (l, b) in beta.iter().enumerate().skip(j + 1) {
            s -= a[l][j] * b;
        }
        beta[j] = s / a[j][j];
    }

    let fitted: Vec<f64> = (0..n)
        .map(|i| (0..k).map(|j| design.get(i, j) * beta[j]).sum())
        .collect();
    let residuals: Vec<f64> = response.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let rss = dot(&residuals, &residuals);
    let sigma2 = if n > k { rss / (n - k) as f64 } else { 0.0 };

    Ok(OlsFit {
        names: design.column_names().into_iter().map(String::from).collect(),
        coefficients: beta,
        fitted,
        residuals,
        rss,
        sigma2,
    })
}

fn reflect(v: &[f64], vtv: f64, x: &mut [f64]) {
    let s = 2.0 * dot(v, x) / vtv;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s * vi;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    // scaled to avoid overflow on large counts squared
    let m = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * a.iter().map(|v| (v / m).powi(2)).sum::<f64>().sqrt()
}
