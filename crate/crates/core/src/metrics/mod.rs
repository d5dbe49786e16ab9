//! Short-term and long-term quality measures for predicted trajectories.

mod climate;
mod correlation;
mod embedding;
mod horizon;
pub mod kdtree;
mod lyapunov;

pub use climate::{climate_check, ClimateConfig, ClimateReport};
pub use correlation::{correlation_curve, correlation_dimension, correlation_sum, log_radii, radius_range, CorrelationConfig, CorrelationCurve};
pub use embedding::{embed, mean_period, Embedding, PeriodEstimate};
pub use horizon::{forecast_horizon, forecast_horizon_with_threshold, ForecastHorizon};
pub use lyapunov::{divergence_curve, lyapunov_rosenstein, LyapunovConfig};

/// Least-squares slope of `y` against `x`.
pub(crate) fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}
