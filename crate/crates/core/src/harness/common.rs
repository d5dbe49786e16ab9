use serde::{Deserialize, Serialize};

use super::table::{fmt, fmt_opt};
use crate::dynamics::exponent_grid;
use crate::error::{Error, Result};
use crate::metrics::{
    correlation_dimension, forecast_horizon_with_threshold, lyapunov_rosenstein, radius_range, CorrelationConfig,
    LyapunovConfig,
};
use crate::minimal_rc::{MinRc, MinRcConfig};
use crate::{FracExponent, Trajectory};

/// Minimal-RC hyperparameters shared by every cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTemplate {
    pub block_size: usize,
    pub spectral_radius: f64,
    pub ridge: f64,
}

impl Default for ModelTemplate {
    fn default() -> Self {
        ModelTemplate {
            block_size: 3,
            spectral_radius: 1e-3,
            ridge: 1e-6,
        }
    }
}

impl ModelTemplate {
    pub fn config(&self, input_dim: usize, eta: FracExponent) -> MinRcConfig {
        MinRcConfig::reduced(input_dim, self.block_size, self.spectral_radius, self.ridge, eta)
    }
}

/// Model exponents to sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EtaGrid {
    List { etas: Vec<FracExponent> },
    Range { from: u32, to: u32, step: u32, denominator: u32 },
    /// `half_steps` grid steps of `step/50` on either side of the data
    /// exponent.
    Window { half_steps: u32, step: u32 },
}

impl EtaGrid {
    pub fn resolve(&self, xi: Option<FracExponent>) -> Result<Vec<FracExponent>> {
        match self {
            EtaGrid::List { etas } => Ok(etas.clone()),
            EtaGrid::Range {
                from,
                to,
                step,
                denominator,
            } => exponent_grid(*from, *to, *step, *denominator),
            EtaGrid::Window { half_steps, step } => {
                let xi = xi.ok_or_else(|| Error::config("an eta window needs a data exponent"))?;
                let xi = xi
                    .rescaled(50)
                    .ok_or_else(|| Error::config(format!("{xi} has no representation over 50")))?;
                let span = half_steps * step;
                let from = xi.numerator().saturating_sub(span).max(*step).max(2);
                exponent_grid(from, xi.numerator() + span, *step, 50)
            }
        }
    }
}

/// Long-term metrics attached to sweep cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClimateSettings {
    pub enabled: bool,
    /// Leading steps of truth and prediction the metrics look at.
    pub steps: usize,
    /// Whether to estimate the predicted largest Lyapunov exponent.
    pub lyapunov: bool,
    pub lyapunov_config: LyapunovConfig,
    pub correlation: CorrelationConfig,
    /// Measure predictions on the true data's radius grid.
    pub data_radii: bool,
    pub tolerance: f64,
}

impl Default for ClimateSettings {
    fn default() -> Self {
        ClimateSettings {
            enabled: true,
            steps: 20_000,
            lyapunov: true,
            lyapunov_config: LyapunovConfig::default(),
            correlation: CorrelationConfig::default(),
            data_radii: true,
            tolerance: 0.1,
        }
    }
}

/// Metrics of one true data realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TruthStats {
    pub lambda: f64,
    pub cdim: Option<f64>,
    pub radii: Option<[f64; 2]>,
}

impl TruthStats {
    pub fn measure(window: &Trajectory, lambda: f64, climate: &ClimateSettings) -> Self {
        if !climate.enabled {
            return TruthStats {
                lambda,
                cdim: None,
                radii: None,
            };
        }
        let cdim = correlation_dimension(window, &climate.correlation).ok();
        let radii = if climate.data_radii {
            radius_range(window, &climate.correlation).ok()
        } else {
            None
        };
        TruthStats { lambda, cdim, radii }
    }
}

/// λ of a true trajectory; NaN when the estimator fails.
pub(crate) fn true_lambda(traj: &Trajectory, cfg: &LyapunovConfig) -> f64 {
    lyapunov_rosenstein(traj, cfg).unwrap_or_else(|e| {
        log::warn!("true Lyapunov exponent unavailable: {e}");
        f64::NAN
    })
}

pub(crate) const METRIC_COLUMNS: [&str; 8] = [
    "diverged",
    "fh_steps",
    "fh_lyap",
    "lyap_true",
    "lyap_pred",
    "cdim_true",
    "cdim_pred",
    "success",
];

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CellOutcome {
    pub diverged: bool,
    pub fh_steps: usize,
    pub fh_lyap: Option<f64>,
    pub lyap_pred: Option<f64>,
    pub cdim_pred: Option<f64>,
}

impl CellOutcome {
    pub fn cdim_error(&self, truth: &TruthStats) -> Option<f64> {
        Some((self.cdim_pred? - truth.cdim?).abs())
    }

    /// Values for [`METRIC_COLUMNS`]. Diverged cells keep their horizon but
    /// carry no climate values.
    pub fn columns(&self, truth: &TruthStats, climate: &ClimateSettings) -> Vec<String> {
        let lam = truth.lambda.is_finite().then_some(truth.lambda);
        let success = if self.diverged || !climate.enabled {
            String::new()
        } else {
            let cdim_ok = self.cdim_error(truth).is_some_and(|e| e <= climate.tolerance);
            let lyap_ok = !climate.lyapunov
                || matches!((self.lyap_pred, lam), (Some(p), Some(t)) if (p - t).abs() <= climate.tolerance);
            (cdim_ok && lyap_ok).to_string()
        };
        let climate_value = |v: Option<f64>| if self.diverged { String::new() } else { fmt_opt(v) };
        vec![
            self.diverged.to_string(),
            self.fh_steps.to_string(),
            fmt_opt(self.fh_lyap),
            fmt_opt(lam),
            climate_value(self.lyap_pred),
            climate_value(truth.cdim),
            climate_value(self.cdim_pred),
            success,
        ]
    }
}

/// Trains at `start`, predicts `predict_len` steps past the training data
/// and scores the prediction against the true continuation.
#[allow(clippy::too_many_arguments)]
pub(crate) fn evaluate_minrc(
    config: MinRcConfig,
    data: &Trajectory,
    start: usize,
    sync_len: usize,
    train_len: usize,
    predict_len: usize,
    truth: &TruthStats,
    climate: &ClimateSettings,
) -> Result<CellOutcome> {
    let head = data.segment(start..start + sync_len + train_len)?;
    let future = data.segment(start + sync_len + train_len..start + sync_len + train_len + predict_len)?;
    let model = MinRc::build(config)?;
    let readout = match model.train(&head, sync_len) {
        Ok(r) => r,
        Err(Error::NonFiniteState { step }) => {
            log::debug!("training state overflowed at step {step}");
            return Ok(CellOutcome {
                diverged: true,
                fh_steps: 0,
                fh_lyap: (truth.lambda > 0.0).then_some(0.0),
                lyap_pred: None,
                cdim_pred: None,
            });
        }
        Err(e) => return Err(e),
    };
    let pred = model.predict(&readout, &head, predict_len)?;
    let lambda = if truth.lambda.is_finite() { truth.lambda } else { 0.0 };
    let fh = forecast_horizon_with_threshold(&future, pred.as_slice(), &future.std(), lambda)?;
    let diverged = pred.diverged();
    let (mut lyap_pred, mut cdim_pred) = (None, None);
    if climate.enabled && !diverged {
        let n = climate.steps.min(pred.len());
        let window = Trajectory::new(pred.as_slice()[..n * pred.dim()].to_vec(), pred.dim(), pred.dt())?;
        if climate.lyapunov {
            lyap_pred = lyapunov_rosenstein(&window, &climate.lyapunov_config).ok();
        }
        let ccfg = CorrelationConfig {
            radius_range: truth.radii.or(climate.correlation.radius_range),
            ..climate.correlation.clone()
        };
        cdim_pred = correlation_dimension(&window, &ccfg).ok();
    }
    Ok(CellOutcome {
        diverged,
        fh_steps: fh.steps,
        fh_lyap: fh.lyapunov_times,
        lyap_pred,
        cdim_pred,
    })
}

pub(crate) fn exponent_columns(e: Option<FracExponent>) -> [String; 2] {
    match e {
        Some(e) => [e.numerator().to_string(), e.denominator().to_string()],
        None => [String::new(), String::new()],
    }
}

pub(crate) fn float_key(v: f64) -> String {
    fmt(v)
}
