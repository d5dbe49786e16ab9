use serde::{Deserialize, Serialize};

use super::kdtree::KdTree;
use super::{embed, fit_slope, mean_period, Embedding, PeriodEstimate};
use crate::error::{Error, Result};
use crate::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LyapunovConfig {
    pub embedding: Embedding,
    /// Temporal exclusion for neighbour pairs, in samples. Defaults to one
    /// mean period.
    pub theiler_window: Option<usize>,
    pub period: PeriodEstimate,
    /// Follow horizon in mean periods.
    pub follow_periods: f64,
    /// Fraction of the divergence curve, from its start, used for the fit.
    pub fit_fraction: f64,
    pub min_pairs: usize,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        LyapunovConfig {
            embedding: Embedding::Auto,
            theiler_window: None,
            period: PeriodEstimate::Peak,
            follow_periods: 3.0,
            fit_fraction: 1.0 / 3.0,
            min_pairs: 10,
        }
    }
}

impl LyapunovConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.follow_periods > 0.0 && self.follow_periods.is_finite()) {
            return Err(Error::config("follow_periods must be positive"));
        }
        if !(self.fit_fraction > 0.0 && self.fit_fraction <= 1.0) {
            return Err(Error::config("fit_fraction must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Mean log distance of initially nearest neighbours, one entry per step of
/// the follow horizon.
pub fn divergence_curve(traj: &Trajectory, cfg: &LyapunovConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let period = mean_period(traj, cfg.period);
    let (points, dim) = embed(traj, cfg.embedding)?;
    let n = points.len() / dim;
    let window = cfg.theiler_window.unwrap_or(period.round() as usize);
    let follow = ((cfg.follow_periods * period).round() as usize).max(2);
    if follow * 2 >= n {
        return Err(Error::InsufficientData(format!(
            "{n} points cannot support a follow horizon of {follow} steps"
        )));
    }
    let m = n - follow;
    let tree = KdTree::new(&points[..m * dim], dim);
    let pairs: Vec<(usize, usize)> = (0..m)
        .filter_map(|i| {
            tree.nearest_outside_window(i, window)
                .filter(|&(_, d2)| d2 > 0.0)
                .map(|(j, _)| (i, j))
        })
        .collect();
    if pairs.len() < cfg.min_pairs {
        return Err(Error::InsufficientData(format!(
            "only {} neighbour pairs outside a window of {window} samples",
            pairs.len()
        )));
    }
    let row = |t: usize| &points[t * dim..(t + 1) * dim];
    let mut sum = vec![0.0; follow];
    let mut count = vec![0usize; follow];
    for &(i, j) in &pairs {
        for k in 0..follow {
            let d2 = super::kdtree::dist2(row(i + k), row(j + k));
            if d2 > 0.0 {
                sum[k] += 0.5 * d2.ln();
                count[k] += 1;
            }
        }
    }
    if count.iter().any(|&c| c == 0) {
        return Err(Error::Degenerate("neighbour pairs collapse onto each other".into()));
    }
    Ok(sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect())
}

/// Largest Lyapunov exponent in inverse time units.
pub fn lyapunov_rosenstein(traj: &Trajectory, cfg: &LyapunovConfig) -> Result<f64> {
    let curve = divergence_curve(traj, cfg)?;
    let end = ((curve.len() as f64 * cfg.fit_fraction).round() as usize).clamp(2, curve.len());
    let x: Vec<f64> = (0..end).map(|k| k as f64).collect();
    Ok(fit_slope(&x, &curve[..end]) / traj.dt())
}
