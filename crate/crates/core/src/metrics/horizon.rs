use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastHorizon {
    pub steps: usize,
    /// `steps · dt · λ`; absent when `λ ≤ 0`.
    pub lyapunov_times: Option<f64>,
}

/// Number of leading steps for which every coordinate of `pred` stays
/// within one standard deviation (of `truth`) of `truth`.
pub fn forecast_horizon(truth: &Trajectory, pred: &Trajectory, lambda: f64) -> Result<ForecastHorizon> {
    if truth.dim() != pred.dim() {
        return Err(Error::config(format!(
            "dimension mismatch: truth {} vs prediction {}",
            truth.dim(),
            pred.dim()
        )));
    }
    if (truth.dt() - pred.dt()).abs() > 1e-12 * truth.dt() {
        return Err(Error::config(format!(
            "sampling mismatch: truth dt {} vs prediction dt {}",
            truth.dt(),
            pred.dt()
        )));
    }
    forecast_horizon_with_threshold(truth, pred.as_slice(), &truth.std(), lambda)
}

/// As [`forecast_horizon`], with an explicit per-coordinate threshold and a
/// row-major prediction that may be shorter than `truth`.
pub fn forecast_horizon_with_threshold(
    truth: &Trajectory,
    pred: &[f64],
    threshold: &[f64],
    lambda: f64,
) -> Result<ForecastHorizon> {
    let d = truth.dim();
    if threshold.len() != d || pred.len() % d != 0 {
        return Err(Error::config("threshold or prediction does not match trajectory dimension"));
    }
    let n = truth.len().min(pred.len() / d);
    let steps = (0..n)
        .position(|t| {
            let x = truth.row(t);
            let y = &pred[t * d..(t + 1) * d];
            (0..d).any(|i| !((x[i] - y[i]).abs() < threshold[i]))
        })
        .unwrap_or(n);
    let lyapunov_times = (lambda > 0.0).then(|| steps as f64 * truth.dt() * lambda);
    Ok(ForecastHorizon {
        steps,
        lyapunov_times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wave(n: usize) -> Trajectory {
        let rows: Vec<[f64; 2]> = (0..n)
            .map(|t| {
                let s = t as f64 * 0.01;
                [s.sin(), (2.0 * s).cos() * 3.0]
            })
            .collect();
        Trajectory::from_rows(&rows, 0.01).unwrap()
    }

    #[test]
    fn identical_prediction_spans_everything() {
        let t = wave(1000);
        let h = forecast_horizon(&t, &t, 0.9).unwrap();
        assert_eq!(h.steps, 1000);
        assert!((h.lyapunov_times.unwrap() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn offset_prediction_has_zero_horizon() {
        let t = wave(1000);
        let sd = t.std();
        let shifted: Vec<f64> = t
            .rows()
            .flat_map(|r| vec![r[0] + 10.0 * sd[0], r[1] + 10.0 * sd[1]])
            .collect();
        let p = Trajectory::new(shifted, 2, 0.01).unwrap();
        assert_eq!(forecast_horizon(&t, &p, 1.0).unwrap().steps, 0);
    }

    #[test]
    fn exponential_error_crossing() {
        let t = wave(1000);
        let sd = t.std();
        let mut p = Vec::new();
        for (k, r) in t.rows().enumerate() {
            let e = (k as f64 - 500.0) * 0.01;
            p.push(r[0] + sd[0] * e.exp());
            p.push(r[1]);
        }
        let h = forecast_horizon_with_threshold(&t, &p, &sd, 1.0).unwrap();
        assert_eq!(h.steps, 500);
    }

    #[test]
    fn nonpositive_lambda_reports_steps_only() {
        let t = wave(10);
        let h = forecast_horizon(&t, &t, 0.0).unwrap();
        assert_eq!(h.steps, 10);
        assert!(h.lyapunov_times.is_none());
    }

    #[test]
    fn short_prediction_caps_horizon() {
        let t = wave(100);
        let h = forecast_horizon_with_threshold(&t, &t.as_slice()[..80], &t.std(), 1.0).unwrap();
        assert_eq!(h.steps, 40);
    }

    proptest! {
        #[test]
        fn affine_invariance(scale in 0.01f64..100.0, shift in -50.0f64..50.0, noise in 0.01f64..2.0) {
            let t = wave(400);
            let p: Vec<f64> = t.as_slice().iter().enumerate()
                .map(|(i, v)| v + noise * (i as f64 * 0.001).powi(2)).collect();
            let p = Trajectory::new(p, 2, 0.01).unwrap();
            let a = forecast_horizon(&t, &p, 1.0).unwrap();
            let map = |tr: &Trajectory| Trajectory::new(
                tr.as_slice().iter().map(|v| v * scale + shift).collect(), 2, 0.01).unwrap();
            let b = forecast_horizon(&map(&t), &map(&p), 1.0).unwrap();
            prop_assert!(a.steps.abs_diff(b.steps) <= 1);
        }
    }
}
