use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Trajectory;

/// How a trajectory is turned into a point cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Embedding {
    /// Full state for multivariate data, a 3-dimensional delay embedding with
    /// a quarter-period lag for scalar data.
    #[default]
    Auto,
    Identity,
    Delay { dimension: usize, delay: usize },
}

/// How the mean period of coordinate 0 is read off its power spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PeriodEstimate {
    /// Reciprocal of the strongest non-zero frequency.
    #[default]
    Peak,
    /// Reciprocal of the power-weighted mean frequency. Less sensitive to
    /// broad low-frequency power such as Lorenz lobe switching.
    MeanFrequency,
}

/// Mean period of coordinate 0 in samples.
pub fn mean_period(traj: &Trajectory, estimate: PeriodEstimate) -> f64 {
    let x = traj.column(0);
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power = |k: usize| buf[k].norm_sqr();
    let freq = match estimate {
        PeriodEstimate::Peak => (1..=n / 2).max_by(|&a, &b| power(a).total_cmp(&power(b))).unwrap_or(1) as f64,
        PeriodEstimate::MeanFrequency => {
            let total: f64 = (1..=n / 2).map(power).sum();
            if total > 0.0 {
                (1..=n / 2).map(|k| k as f64 * power(k)).sum::<f64>() / total
            } else {
                1.0
            }
        }
    };
    n as f64 / freq
}

/// Embedded points, row-major, and their dimension.
pub fn embed(traj: &Trajectory, embedding: Embedding) -> Result<(Vec<f64>, usize)> {
    let embedding = match embedding {
        Embedding::Auto if traj.dim() > 1 => Embedding::Identity,
        Embedding::Auto => {
            let lag = (mean_period(traj, PeriodEstimate::Peak) / 4.0).round() as usize;
            let lag = lag.clamp(1, (traj.len() / 20).max(1));
            Embedding::Delay {
                dimension: 3,
                delay: lag,
            }
        }
        e => e,
    };
    match embedding {
        Embedding::Identity | Embedding::Auto => Ok((traj.as_slice().to_vec(), traj.dim())),
        Embedding::Delay { dimension, delay } => {
            if dimension == 0 || delay == 0 {
                return Err(Error::config("delay embedding needs positive dimension and delay"));
            }
            let span = (dimension - 1) * delay;
            if traj.len() <= span {
                return Err(Error::InsufficientData(format!(
                    "{} rows cannot be delay-embedded with span {span}",
                    traj.len()
                )));
            }
            let d = traj.dim();
            let m = traj.len() - span;
            let mut out = Vec::with_capacity(m * dimension * d);
            for t in 0..m {
                for k in 0..dimension {
                    out.extend_from_slice(traj.row(t + k * delay));
                }
            }
            Ok((out, dimension * d))
        }
    }
}
