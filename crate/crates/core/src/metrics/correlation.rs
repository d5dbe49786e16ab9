use serde::{Deserialize, Serialize};

use super::kdtree::{dist2, KdTree};
use super::{embed, fit_slope, Embedding};
use crate::error::{Error, Result};
use crate::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrelationConfig {
    pub embedding: Embedding,
    pub radii: usize,
    /// Percentiles of the pairwise-distance distribution bounding the radii.
    pub lower_percentile: f64,
    pub upper_percentile: f64,
    /// Points used to estimate the distance percentiles.
    pub percentile_sample: usize,
    /// Larger inputs are thinned by an even stride.
    pub max_points: usize,
    pub min_points: usize,
    /// Fixed `[r_min, r_max]`, overriding the percentiles. Used to measure
    /// several trajectories on the same length scales.
    pub radius_range: Option<[f64; 2]>,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        CorrelationConfig {
            embedding: Embedding::Auto,
            radii: 24,
            lower_percentile: 0.1,
            upper_percentile: 10.0,
            percentile_sample: 1000,
            max_points: 20_000,
            min_points: 100,
            radius_range: None,
        }
    }
}

impl CorrelationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radii < 4 {
            return Err(Error::config("at least 4 radii are needed"));
        }
        if !(0.0 < self.lower_percentile
            && self.lower_percentile < self.upper_percentile
            && self.upper_percentile <= 100.0)
        {
            return Err(Error::config("percentiles must satisfy 0 < lower < upper <= 100"));
        }
        if let Some([lo, hi]) = self.radius_range {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::config("radius_range must satisfy 0 < r_min < r_max"));
            }
        }
        if self.percentile_sample < 2 || self.max_points < 2 || self.min_points < 2 {
            return Err(Error::config("sample sizes must be at least 2"));
        }
        Ok(())
    }
}

/// Correlation sum on the radius grid plus the fitted slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub radii: Vec<f64>,
    /// Ordered pairs closer than each radius.
    pub pair_counts: Vec<u64>,
    pub points: usize,
    pub dimension: f64,
}

/// Ordered pair counts `#{(i, j): i ≠ j, ‖xᵢ - xⱼ‖ < r}` for ascending radii.
pub fn correlation_sum(points: &[f64], dim: usize, radii: &[f64]) -> Vec<u64> {
    KdTree::new(points, dim).count_pairs(radii)
}

/// `n` logarithmically spaced radii from `lo` to `hi` inclusive.
pub fn log_radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

fn thin(points: &[f64], dim: usize, cap: usize) -> Vec<f64> {
    let n = points.len() / dim;
    if n <= cap {
        return points.to_vec();
    }
    (0..cap)
        .flat_map(|k| {
            let i = k * n / cap;
            points[i * dim..(i + 1) * dim].iter().copied()
        })
        .collect()
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Radii bounds from percentiles of the pairwise distances of a thinned
/// sample of `points`.
fn percentile_range(points: &[f64], dim: usize, cfg: &CorrelationConfig) -> Result<[f64; 2]> {
    let sample = thin(points, dim, cfg.percentile_sample);
    let m = sample.len() / dim;
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let d2 = dist2(&sample[i * dim..(i + 1) * dim], &sample[j * dim..(j + 1) * dim]);
            if d2 > 0.0 {
                dists.push(d2.sqrt());
            }
        }
    }
    if dists.is_empty() {
        return Err(Error::Degenerate("all points coincide".into()));
    }
    dists.sort_by(f64::total_cmp);
    let lo = percentile(&dists, cfg.lower_percentile);
    let hi = percentile(&dists, cfg.upper_percentile);
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Degenerate(format!(
            "distance percentiles do not span a range ({lo}, {hi})"
        )));
    }
    Ok([lo, hi])
}

/// The `[r_min, r_max]` the percentile rule picks for `traj`.
pub fn radius_range(traj: &Trajectory, cfg: &CorrelationConfig) -> Result<[f64; 2]> {
    cfg.validate()?;
    let (points, dim) = embed(traj, cfg.embedding)?;
    percentile_range(&thin(&points, dim, cfg.max_points), dim, cfg)
}

pub fn correlation_curve(traj: &Trajectory, cfg: &CorrelationConfig) -> Result<CorrelationCurve> {
    cfg.validate()?;
    if traj.len() < cfg.min_points {
        return Err(Error::InsufficientData(format!(
            "correlation dimension needs {} points, got {}",
            cfg.min_points,
            traj.len()
        )));
    }
    let (points, dim) = embed(traj, cfg.embedding)?;
    let points = thin(&points, dim, cfg.max_points);
    let n = points.len() / dim;

    let [lo, hi] = match cfg.radius_range {
        Some(range) => range,
        None => percentile_range(&points, dim, cfg)?,
    };
    let radii = log_radii(lo, hi, cfg.radii);
    let pair_counts = correlation_sum(&points, dim, &radii);

    let skip = cfg.radii / 4;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for k in skip..cfg.radii - skip {
        if pair_counts[k] > 0 {
            x.push(radii[k].ln());
            y.push((pair_counts[k] as f64).ln());
        }
    }
    if x.len() < 3 {
        return Err(Error::Degenerate("scaling region has too few non-empty radii".into()));
    }
    let dimension = fit_slope(&x, &y);
    Ok(CorrelationCurve {
        radii,
        pair_counts,
        points: n,
        dimension,
    })
}

/// Grassberger–Procaccia correlation dimension.
pub fn correlation_dimension(traj: &Trajectory, cfg: &CorrelationConfig) -> Result<f64> {
    correlation_curve(traj, cfg).map(|c| c.dimension)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn uniform(n: usize, dim: usize, seed: u64) -> Trajectory {
        let mut rng = crate::rng::stream_rng(seed, 0);
        let v = (0..n * dim).map(|_| rng.random::<f64>()).collect();
        Trajectory::new(v, dim, 1.0).unwrap()
    }

    #[test]
    fn unit_square_is_two_dimensional() {
        let c = correlation_dimension(&uniform(10_000, 2, 3), &CorrelationConfig::default()).unwrap();
        assert!((c - 2.0).abs() < 0.1, "{c}");
    }

    #[test]
    fn segment_in_space_is_one_dimensional() {
        let mut rng = crate::rng::stream_rng(4, 0);
        let rows: Vec<[f64; 3]> = (0..10_000)
            .map(|_| {
                let s: f64 = rng.random();
                [1.0 + 2.0 * s, -s, 0.5 * s]
            })
            .collect();
        let t = Trajectory::from_rows(&rows, 1.0).unwrap();
        let c = correlation_dimension(&t, &CorrelationConfig::default()).unwrap();
        assert!((c - 1.0).abs() < 0.05, "{c}");
    }

    #[test]
    fn identical_points_are_degenerate() {
        let t = Trajectory::new(vec![1.0; 600], 3, 1.0).unwrap();
        assert!(matches!(
            correlation_dimension(&t, &CorrelationConfig::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn log_radii_endpoints() {
        let r = log_radii(0.01, 1.0, 3);
        assert!((r[0] - 0.01).abs() < 1e-15 && (r[1] - 0.1).abs() < 1e-15 && (r[2] - 1.0).abs() < 1e-15);
    }
}
