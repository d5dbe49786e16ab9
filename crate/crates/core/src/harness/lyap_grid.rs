use std::path::Path;

use serde::{Deserialize, Serialize};

use super::common::float_key;
use super::table::{fmt, run_cells};
use super::RunReport;
use crate::dynamics::simulate;
use crate::error::{Error, Result};
use crate::metrics::{lyapunov_rosenstein, LyapunovConfig};
use crate::{FracExponent, IntegratorConfig, SystemSpec};

/// Largest Lyapunov exponent of the uniform-exponent Halvorsen system over a
/// grid of `a` and `ξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LyapGridConfig {
    pub a_values: Vec<f64>,
    pub xi_grid: Vec<FracExponent>,
    pub transient: usize,
    pub steps: usize,
    pub initial_condition: Option<[f64; 3]>,
    pub integrator: IntegratorConfig,
    pub lyapunov: LyapunovConfig,
    /// Cells whose smallest coordinate std is at or below this have settled
    /// on a fixed point; λ is not estimated there.
    pub min_std: f64,
}

impl Default for LyapGridConfig {
    fn default() -> Self {
        LyapGridConfig {
            a_values: vec![1.3, 2.0, 3.0, 3.98, 10.0],
            xi_grid: crate::dynamics::exponent_grid(100, 280, 20, 50).expect("static grid"),
            transient: 10_000,
            steps: 40_000,
            initial_condition: None,
            integrator: IntegratorConfig::default(),
            lyapunov: LyapunovConfig::default(),
            min_std: 1e-3,
        }
    }
}

pub(super) fn run(cfg: &LyapGridConfig, seed: u64, out: &Path, resume: bool) -> Result<RunReport> {
    let mut cells = Vec::new();
    let mut keys = Vec::new();
    for &a in &cfg.a_values {
        for &xi in &cfg.xi_grid {
            keys.push(vec![float_key(a), xi.numerator().to_string(), xi.denominator().to_string()]);
            cells.push((a, xi));
        }
    }
    let header = ["a", "xi_num", "xi_den", "diverged", "fixed_point", "lyapunov", "chaotic"];
    let (_, cells_run) = run_cells(&out.join("lyap_grid.csv"), &header, &keys, resume, |i| {
        let (a, xi) = cells[i];
        let system = SystemSpec::halvorsen_uniform(a, xi);
        let x0 = cfg.initial_condition.unwrap_or_else(|| system.default_initial_condition(seed));
        match simulate(&system, x0, cfg.transient, cfg.steps, &cfg.integrator) {
            Ok(traj) => {
                let spread = traj.std().into_iter().fold(f64::INFINITY, f64::min);
                if !(spread > cfg.min_std) {
                    return Ok(vec!["false".into(), "true".into(), String::new(), "false".into()]);
                }
                let lambda = lyapunov_rosenstein(&traj, &cfg.lyapunov)?;
                Ok(vec!["false".into(), "false".into(), fmt(lambda), (lambda > 0.0).to_string()])
            }
            Err(Error::Diverged { .. }) => Ok(vec!["true".into(), "false".into(), String::new(), "false".into()]),
            Err(e) => Err(e),
        }
    })?;
    Ok(RunReport {
        cells: cells_run,
        shortfall: 0,
        files: vec!["lyap_grid.csv".into()],
    })
}
