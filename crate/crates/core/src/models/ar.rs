//! Autoregressive models for regression residuals, fitted by conditional
//! least squares with the order chosen by AIC.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ols::fit_ols;
use crate::series::DesignMatrix;

use super::FittedModel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArModel {
    pub order: usize,
    /// `phi[l - 1]` multiplies the residual `l` steps back.
    pub phi: Vec<f64>,
    pub intercept: f64,
    pub innovation_variance: f64,
    pub aic: f64,
    /// Rows used by the final conditional least-squares fit.
    pub n_used: usize,
}

impl ArModel {
    /// White-noise model with the given mean.
    pub fn zero_order(intercept: f64) -> Self {
        ArModel {
            order: 0,
            phi: Vec::new(),
            intercept,
            innovation_variance: 0.0,
            aic: 0.0,
            n_used: 0,
        }
    }

    /// One-step prediction of `history[t]` from `history[t - order..t]`.
    pub fn predict_at(&self, history: &[f64], t: usize) -> f64 {
        self.intercept
            + self
                .phi
                .iter()
                .enumerate()
                .map(|(l, p)| p * history[t - 1 - l])
                .sum::<f64>()
    }

    /// `horizon` future values, continuing the recursion from the end of
    /// `history` with future innovations set to zero.
    pub fn forecast_path(&self, history: &[f64], horizon: usize) -> Vec<f64> {
        let mut ext = history.to_vec();
        for _ in 0..horizon {
            let t = ext.len();
            let next = self.predict_at(&ext, t);
            ext.push(next);
        }
        ext.split_off(history.len())
    }
}

/// `min(10, n / 5)`
pub fn default_max_order(n_residuals: usize) -> usize {
    (n_residuals / 5).min(10)
}

fn lag_design(x: &[f64], order: usize, first_row: usize) -> DesignMatrix {
    let rows = x.len() - first_row;
    let mut d = DesignMatrix::new(rows);
    d.push("ar_intercept", vec![1.0; rows]).expect("rows match");
    for l in 1..=order {
        d.push(format!("ar_phi_{l}"), x[first_row - l..x.len() - l].to_vec())
            .expect("rows match");
    }
    d
}

/// Fits AR(p) for `p = 0..=max_order` on the common sample
/// `x[max_order..]`, picks the lowest `n ln(RSS/n) + 2(p+1)`, then refits
/// the chosen order on all `len - p` usable rows.
pub fn fit_ar(x: &[f64], max_order: usize) -> Result<ArModel> {
    if x.len() < max_order + 10 {
        return Err(Error::InsufficientData {
            needed: max_order + 10,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("residuals contain non-finite values".into()));
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    if x.iter().all(|v| *v == x[0]) {
        return Ok(ArModel {
            n_used: x.len(),
            ..ArModel::zero_order(mean)
        });
    }

    let n_eff = (x.len() - max_order) as f64;
    let response = &x[max_order..];
    let mut best: Option<(usize, f64)> = None;
    for p in 0..=max_order {
        let fit = match fit_ols(&lag_design(x, p, max_order), response) {
            Ok(f) => f,
            Err(Error::SingularDesign { .. }) => continue,
            Err(e) => return Err(e),
        };
        let aic = n_eff * (fit.rss / n_eff).max(f64::MIN_POSITIVE).ln() + 2.0 * (p + 1) as f64;
        if best.is_none_or(|(_, b)| aic < b) {
            best = Some((p, aic));
        }
    }
    let (order, aic) = best.ok_or_else(|| {
        Error::Degenerate("no autoregressive order could be fitted".into())
    })?;

    let fit = fit_ols(&lag_design(x, order, order), &x[order..])?;
    Ok(ArModel {
        order,
        phi: fit.coefficients[1..].to_vec(),
        intercept: fit.coefficients[0],
        innovation_variance: fit.sigma2,
        aic,
        n_used: x.len() - order,
    })
}

/// AR error model on the residuals of a fitted regression.
pub fn fit_ar_on_residuals(base: &FittedModel, max_order: usize) -> Result<ArModel> {
    fit_ar(&base.residuals, max_order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn simulate_ar1(seed: u64, n: usize, phi: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut x = Vec::with_capacity(n + 50);
        let mut prev = 0.0;
        for _ in 0..n + 50 {
            prev = phi * prev + noise.sample(&mut rng);
            x.push(prev);
        }
        x.split_off(50)
    }

    #[test]
    fn zero_residuals_give_order_zero() {
        let ar = fit_ar(&[0.0; 30], 4).unwrap();
        assert_eq!(ar.order, 0);
        assert_eq!(ar.innovation_variance, 0.0);
        assert_eq!(ar.intercept, 0.0);
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            fit_ar(&[1.0; 12], 4),
            Err(Error::InsufficientData { needed: 14, got: 12 })
        ));
    }

    #[test]
    fn white_noise_mostly_order_zero() {
        let zeros = (0..200)
            .filter(|&s| fit_ar(&simulate_ar1(s, 100, 0.0), 10).unwrap().order == 0)
            .count();
        assert!(zeros > 100, "{zeros}");
    }

    #[test]
    fn recovers_ar1() {
        let mut ones = 0;
        let mut inside = 0;
        for s in 0..200 {
            let ar = fit_ar(&simulate_ar1(1000 + s, 200, 0.7), 10).unwrap();
            if ar.order == 1 {
                ones += 1;
                if (0.55..=0.85).contains(&ar.phi[0]) {
                    inside += 1;
                }
            }
        }
        assert!(ones > 100, "{ones}");
        assert!(inside as f64 >= 0.95 * ones as f64);
    }

    #[test]
    fn geometric_forecast_path() {
        let ar = ArModel {
            order: 1,
            phi: vec![0.5],
            ..ArModel::zero_order(0.0)
        };
        assert_eq!(ar.forecast_path(&[9.0, 4.0], 3), vec![2.0, 1.0, 0.5]);
    }
}
