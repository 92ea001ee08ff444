//! Point-forecast accuracy metrics. MAPE is a fraction, not a percentage.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::FittedModel;
use crate::series::MonthlySeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mape {
    pub value: f64,
    pub n_used: usize,
    pub n_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSet {
    pub rmse: f64,
    /// `None` when every actual value is zero.
    pub mape: Option<f64>,
    pub mse: f64,
    pub rse: f64,
    pub n_used: usize,
    pub n_skipped_zero: usize,
}

fn check_pair(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::Validation(format!(
            "length mismatch: {} actual vs {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Empty("no points to compare".into()));
    }
    if actual.iter().chain(predicted).any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite value in metric input".into()));
    }
    Ok(())
}

pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    Ok(actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .sum::<f64>()
        / actual.len() as f64)
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    mse(actual, predicted).map(f64::sqrt)
}

/// Mean of `|(a - p) / a|` over points with `a > 0`; zero actuals are
/// skipped and counted.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<Mape> {
    check_pair(actual, predicted)?;
    let mut sum = 0.0;
    let mut used = 0;
    for (a, p) in actual.iter().zip(predicted) {
        if *a > 0.0 {
            sum += ((a - p) / a).abs();
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::UndefinedMape);
    }
    Ok(Mape {
        value: sum / used as f64,
        n_used: used,
        n_skipped: actual.len() - used,
    })
}

/// `sqrt(RSS / (n - n_params))`
pub fn rse(residuals: &[f64], n_params: usize) -> Result<f64> {
    if residuals.len() <= n_params {
        return Err(Error::InsufficientData {
            needed: n_params + 1,
            got: residuals.len(),
        });
    }
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    Ok((rss / (residuals.len() - n_params) as f64).sqrt())
}

impl MetricSet {
    pub fn compute(
        actual: &[f64],
        predicted: &[f64],
        working_residuals: &[f64],
        n_params: usize,
    ) -> Result<MetricSet> {
        let mse = mse(actual, predicted)?;
        let (mape, n_used, n_skipped_zero) = match mape(actual, predicted) {
            Ok(m) => (Some(m.value), m.n_used, m.n_skipped),
            Err(Error::UndefinedMape) => (None, 0, actual.len()),
            Err(e) => return Err(e),
        };
        Ok(MetricSet {
            rmse: mse.sqrt(),
            mape,
            mse,
            rse: rse(working_residuals, n_params)?,
            n_used,
            n_skipped_zero,
        })
    }

    /// Count-scale accuracy of the fit over its effective sample; RSE uses
    /// the working-scale residuals and parameter count.
    pub fn in_sample(model: &FittedModel, series: &MonthlySeries) -> Result<MetricSet> {
        Self::compute(
            model.actuals(series),
            &model.fitted,
            &model.residuals,
            model.n_params(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(rmse(&[1.0; 4], &[0.0; 4]).unwrap(), 1.0);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn mape_examples() {
        let m = mape(&[100.0, 100.0], &[90.0, 110.0]).unwrap();
        assert!((m.value - 0.10).abs() < 1e-15);
        assert_eq!(m.n_used, 2);
        assert_eq!(mape(&[5.0, 7.0], &[5.0, 7.0]).unwrap().value, 0.0);
        let m = mape(&[0.0, 50.0], &[5.0, 60.0]).unwrap();
        assert!((m.value - 0.20).abs() < 1e-15);
        assert_eq!((m.n_used, m.n_skipped), (1, 1));
        assert_eq!(mape(&[0.0, 0.0], &[1.0, 2.0]), Err(Error::UndefinedMape));
    }

    #[test]
    fn rse_examples() {
        assert_eq!(rse(&[0.0; 3], 1).unwrap(), 0.0);
        assert!((rse(&[1.0, -1.0, 1.0, -1.0], 2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(rse(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn metric_set_counts_and_undefined_mape() {
        let m = MetricSet::compute(&[0.0, 10.0, 20.0], &[1.0, 11.0, 18.0], &[1.0, 1.0, 2.0], 1).unwrap();
        assert_eq!(m.n_used + m.n_skipped_zero, 3);
        let m = MetricSet::compute(&[0.0, 0.0], &[1.0, 2.0], &[1.0, 2.0], 1).unwrap();
        assert_eq!(m.mape, None);
        assert_eq!(m.n_skipped_zero, 2);
    }

    proptest! {
        #[test]
        fn rmse_squared_is_mse(pairs in prop::collection::vec((0.0f64..1e4, 0.0f64..1e4), 1..50)) {
            let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let r = rmse(&a, &p).unwrap();
            let m = mse(&a, &p).unwrap();
            prop_assert!(r >= 0.0);
            prop_assert!((r * r - m).abs() <= 1e-10 * m.max(1e-300));
        }

        #[test]
        fn mape_scale_invariant(
            pairs in prop::collection::vec((0.1f64..1e4, 0.0f64..1e4), 1..50),
            c in 0.01f64..100.0,
        ) {
            let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let ca: Vec<f64> = a.iter().map(|v| v * c).collect();
            let cp: Vec<f64> = p.iter().map(|v| v * c).collect();
            let m1 = mape(&a, &p).unwrap().value;
            let m2 = mape(&ca, &cp).unwrap().value;
            prop_assert!((m1 - m2).abs() <= 1e-12 * m1.max(1.0));
        }

        #[test]
        fn rmse_zero_iff_equal(a in prop::collection::vec(0.0f64..1e3, 1..30), i in 0usize..30, d in 0.5f64..10.0) {
            prop_assert_eq!(rmse(&a, &a).unwrap(), 0.0);
            let mut p = a.clone();
            let i = i % p.len();
            p[i] += d;
            prop_assert!(rmse(&a, &p).unwrap() > 0.0);
        }
    }
}
