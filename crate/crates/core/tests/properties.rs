use epiforecast_core::ingest::{parse_csv, Dataset};
use epiforecast_core::ols::fit_ols;
use epiforecast_core::series::DesignMatrix;
use epiforecast_core::{
    fit_model, forecast, rolling_forecast, select_model, BaseKind, Execution, FitOptions, ModelKind,
    MonthDate, MonthlySeries, RollingConfig, RollingMode,
};
use proptest::prelude::*;

fn month() -> impl Strategy<Value = MonthDate> {
    (1950i32..2050, 1u32..=12).prop_map(|(y, m)| MonthDate::new(y, m).unwrap())
}

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), (0u32..1_000_000).prop_map(f64::from), 0.0f64..1e9]
}

fn dataset() -> impl Strategy<Value = Dataset> {
    (month(), 1usize..40, 1usize..5).prop_flat_map(|(start, n, regions)| {
        prop::collection::vec(prop::collection::vec(value(), n), regions).prop_map(move |cols| {
            let series = cols
                .into_iter()
                .enumerate()
                .map(|(i, v)| MonthlySeries::new(format!("R{i}"), start, v).unwrap())
                .collect();
            Dataset::from_series(series, n).unwrap()
        })
    })
}

fn seasonal_series() -> impl Strategy<Value = MonthlySeries> {
    (37usize..60, prop::collection::vec(-20.0f64..20.0, 60), 50.0f64..500.0).prop_map(|(n, noise, level)| {
        let values = (0..n)
            .map(|t| {
                let season = 0.3 * level * (std::f64::consts::TAU * t as f64 / 12.0).sin();
                (level + season + t as f64 + noise[t]).max(0.0)
            })
            .collect();
        MonthlySeries::new("p", MonthDate::new(2016, 1).unwrap(), values).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(d in dataset()) {
        prop_assert_eq!(parse_csv(d.to_csv().as_bytes()).unwrap(), d);
    }

    #[test]
    fn row_order_does_not_matter(d in dataset(), seed in any::<u64>()) {
        let csv = d.to_csv();
        let mut lines: Vec<&str> = csv.lines().collect();
        let header = lines.remove(0);
        let len = lines.len();
        for i in (1..len).rev() {
            let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) % (i as u64 + 1)) as usize;
            lines.swap(i, j);
        }
        let shuffled = std::iter::once(header).chain(lines).collect::<Vec<_>>().join("\n");
        prop_assert_eq!(parse_csv(shuffled.as_bytes()).unwrap(), d);
    }

    #[test]
    fn dropping_a_middle_row_reports_that_month(d in dataset()) {
        prop_assume!(d.n_months() >= 3);
        let csv = d.to_csv();
        let mut lines: Vec<&str> = csv.lines().collect();
        let gone = lines.remove(2);
        let month = gone.split(',').next().unwrap().to_string();
        let err = parse_csv(lines.join("\n").as_bytes()).unwrap_err();
        prop_assert_eq!(err.code(), "month-gap");
        prop_assert!(err.to_string().contains(&month));
    }

    #[test]
    fn ols_decomposes_response(rows in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -50.0f64..50.0), 6..30)) {
        let n = rows.len();
        let mut d = DesignMatrix::new(n);
        d.push("one", vec![1.0; n]).unwrap();
        d.push("a", rows.iter().map(|r| r.0).collect()).unwrap();
        d.push("b", rows.iter().map(|r| r.1).collect()).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| r.2).collect();
        if let Ok(fit) = fit_ols(&d, &y) {
            for ((f, r), yi) in fit.fitted.iter().zip(&fit.residuals).zip(&y) {
                prop_assert!((f + r - yi).abs() < 1e-9);
            }
            let scaled: Vec<f64> = y.iter().map(|v| 3.0 * v).collect();
            let fit3 = fit_ols(&d, &scaled).unwrap();
            for (a, b) in fit.coefficients.iter().zip(&fit3.coefficients) {
                prop_assert!((3.0 * a - b).abs() < 1e-8 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn forecasts_are_finite_and_non_negative_for_log(s in seasonal_series(), h in 1usize..25) {
        for kind in [ModelKind::PolySeason, ModelKind::LogTransformed, ModelKind::LagTrend, ModelKind::LagPolyTrend] {
            let m = fit_model(&s, kind, &FitOptions::default()).unwrap();
            let fc = forecast(&m, &s, h).unwrap();
            prop_assert_eq!(fc.point.len(), h);
            prop_assert!(fc.point.iter().all(|p| p.is_finite()));
            if kind == ModelKind::LogTransformed {
                prop_assert!(fc.point.iter().all(|p| *p >= 0.0));
            }
        }
    }

    #[test]
    fn rolling_window_plan(s in seasonal_series(), h in 1usize..6, to_end in any::<bool>()) {
        let cfg = RollingConfig {
            horizon: h,
            mode: if to_end { RollingMode::ToEnd } else { RollingMode::FixedHorizon },
            ..RollingConfig::default()
        };
        let r = rolling_forecast(&s, ModelKind::PolySeason, &cfg).unwrap();
        prop_assert_eq!(r.windows.len(), s.len() - 36);
        for w in &r.windows {
            prop_assert!(w.train_size + w.horizon <= s.len());
            if !to_end {
                prop_assert!(w.horizon <= h);
            }
        }
        prop_assert!(r.average_mape >= 0.0);
    }
}

#[test]
fn selection_does_not_depend_on_execution_mode() {
    let values: Vec<f64> = (0..54)
        .map(|t| 200.0 + 50.0 * (t as f64 * 0.52).sin() + 2.0 * t as f64 + ((t * 37) % 11) as f64 * 3.0)
        .collect();
    let s = MonthlySeries::new("x", MonthDate::new(2019, 1).unwrap(), values).unwrap();
    let seq = RollingConfig {
        execution: Execution::Sequential,
        ..RollingConfig::default()
    };
    let a = select_model(&s, &seq).unwrap();
    let b = select_model(&s, &RollingConfig::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.candidates.len(), 4);
    assert!(matches!(a.corrected.model, ModelKind::ArCorrected(_)));
    assert_eq!(a.in_sample.len(), 5);
    assert_eq!(a.base_choice.base(), match a.corrected.model {
        ModelKind::ArCorrected(b) => b,
        _ => BaseKind::PolySeason,
    });
}

#[test]
fn to_end_on_44_points_tests_eight_down_to_one() {
    let values: Vec<f64> = (0..44).map(|t| 100.0 + (t % 12) as f64 * 7.0 + t as f64).collect();
    let s = MonthlySeries::new("x", MonthDate::new(2018, 1).unwrap(), values).unwrap();
    let cfg = RollingConfig {
        mode: RollingMode::ToEnd,
        ..RollingConfig::default()
    };
    let r = rolling_forecast(&s, ModelKind::PolySeason, &cfg).unwrap();
    let sizes: Vec<usize> = r.windows.iter().map(|w| w.horizon).collect();
    assert_eq!(sizes, vec![8, 7, 6, 5, 4, 3, 2, 1]);
}
