use serde::{Deserialize, Serialize};

use super::{correlation_dimension, lyapunov_rosenstein, CorrelationConfig, LyapunovConfig};
use crate::error::Result;
use crate::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClimateConfig {
    pub lyapunov: LyapunovConfig,
    pub correlation: CorrelationConfig,
    /// Absolute tolerance on both metrics.
    pub tolerance: f64,
}

impl Default for ClimateConfig {
    fn default() -> Self {
        ClimateConfig {
            lyapunov: LyapunovConfig::default(),
            correlation: CorrelationConfig::default(),
            tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClimateReport {
    pub lyapunov_true: f64,
    pub lyapunov_pred: f64,
    pub correlation_dim_true: f64,
    pub correlation_dim_pred: f64,
    pub success: bool,
}

pub fn climate_check(truth: &Trajectory, pred: &Trajectory, cfg: &ClimateConfig) -> Result<ClimateReport> {
    let lyapunov_true = lyapunov_rosenstein(truth, &cfg.lyapunov)?;
    let lyapunov_pred = lyapunov_rosenstein(pred, &cfg.lyapunov)?;
    let correlation_dim_true = correlation_dimension(truth, &cfg.correlation)?;
    let correlation_dim_pred = correlation_dimension(pred, &cfg.correlation)?;
    let success = (lyapunov_pred - lyapunov_true).abs() <= cfg.tolerance
        && (correlation_dim_pred - correlation_dim_true).abs() <= cfg.tolerance;
    Ok(ClimateReport {
        lyapunov_true,
        lyapunov_pred,
        correlation_dim_true,
        correlation_dim_pred,
        success,
    })
}
