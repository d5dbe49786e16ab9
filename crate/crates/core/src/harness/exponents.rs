use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::common::{evaluate_minrc, true_lambda, ClimateSettings, EtaGrid, ModelTemplate, TruthStats, METRIC_COLUMNS};
use super::table::{fmt, fmt_opt, run_cells, Table};
use super::RunReport;
use crate::dynamics::simulate;
use crate::error::{Error, Result};
use crate::metrics::LyapunovConfig;
use crate::rng::{derive_seed, stream, stream_rng};
use crate::{FracExponent, IntegratorConfig, SystemSpec, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    /// `ξ₁ = ξ₂ ≠ ξ₃`.
    Two,
    /// Three independently drawn exponents.
    Three,
}

/// Model-exponent sweeps over randomly drawn mixed-exponent Halvorsen
/// systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExponentSweepConfig {
    pub a: f64,
    pub trajectories: usize,
    /// Inclusive numerator range for the data exponents, over 50.
    pub numerator_min: u32,
    pub numerator_max: u32,
    pub numerator_step: u32,
    pub eta_grid: EtaGrid,
    pub model: ModelTemplate,
    pub sync_len: usize,
    pub train_len: usize,
    pub predict_len: usize,
    pub transient: usize,
    pub lyapunov_len: usize,
    pub lyapunov: LyapunovConfig,
    /// Draws with a true λ at or below this are rejected as not chaotic.
    pub min_lyapunov: f64,
    /// Draws whose smallest coordinate std is at or below this have
    /// collapsed onto a fixed point and are rejected.
    pub min_std: f64,
    /// Draws allowed per accepted trajectory.
    pub budget_factor: usize,
    pub integrator: IntegratorConfig,
    pub climate: ClimateSettings,
}

impl ExponentSweepConfig {
    pub fn two() -> Self {
        ExponentSweepConfig {
            a: 3.98,
            trajectories: 10,
            numerator_min: 54,
            numerator_max: 280,
            numerator_step: 2,
            eta_grid: EtaGrid::Range {
                from: 54,
                to: 280,
                step: 4,
                denominator: 50,
            },
            model: ModelTemplate::default(),
            sync_len: 1000,
            train_len: 5000,
            predict_len: 10_000,
            transient: 10_000,
            lyapunov_len: 40_000,
            lyapunov: LyapunovConfig::default(),
            min_lyapunov: 0.0,
            min_std: 1e-3,
            budget_factor: 10,
            integrator: IntegratorConfig::default(),
            climate: ClimateSettings {
                steps: 10_000,
                lyapunov: false,
                ..ClimateSettings::default()
            },
        }
    }

    pub fn three() -> Self {
        ExponentSweepConfig {
            numerator_min: 52,
            eta_grid: EtaGrid::Range {
                from: 52,
                to: 280,
                step: 4,
                denominator: 50,
            },
            ..Self::two()
        }
    }
}

impl Default for ExponentSweepConfig {
    fn default() -> Self {
        Self::two()
    }
}

struct Accepted {
    index: usize,
    xi: [FracExponent; 3],
    data: Trajectory,
    truth: TruthStats,
}

enum Draw {
    Accepted(Accepted),
    Rejected([FracExponent; 3], String),
}

fn draw_exponents(cfg: &ExponentSweepConfig, arity: Arity, seed: u64, k: usize) -> Result<[FracExponent; 3]> {
    let mut rng = stream_rng(derive_seed(seed, k as u64), stream::RESAMPLE);
    let steps = (cfg.numerator_max - cfg.numerator_min) / cfg.numerator_step;
    let mut pick = || -> Result<FracExponent> {
        FracExponent::new(cfg.numerator_min + cfg.numerator_step * rng.random_range(0..=steps), 50)
    };
    Ok(match arity {
        Arity::Two => {
            let (p, q) = (pick()?, pick()?);
            [p, p, q]
        }
        Arity::Three => [pick()?, pick()?, pick()?],
    })
}

fn attempt(cfg: &ExponentSweepConfig, arity: Arity, seed: u64, k: usize) -> Result<Draw> {
    let xi = draw_exponents(cfg, arity, seed, k)?;
    if arity == Arity::Three && (xi[0] == xi[1] || xi[0] == xi[2] || xi[1] == xi[2]) {
        return Ok(Draw::Rejected(xi, "repeated exponent".into()));
    }
    let system = SystemSpec::FractionalHalvorsen { a: cfg.a, xi };
    let len = (cfg.sync_len + cfg.train_len + cfg.predict_len).max(cfg.lyapunov_len);
    let data = match simulate(&system, system.default_initial_condition(seed), cfg.transient, len, &cfg.integrator) {
        Ok(d) => d,
        Err(Error::Diverged { .. }) => return Ok(Draw::Rejected(xi, "diverged".into())),
        Err(e) => return Err(e),
    };
    let head = data.segment(0..cfg.lyapunov_len.min(len))?;
    let spread = head.std().into_iter().fold(f64::INFINITY, f64::min);
    if !(spread > cfg.min_std) {
        return Ok(Draw::Rejected(xi, format!("fixed point (std {})", fmt(spread))));
    }
    let lambda = true_lambda(&head, &cfg.lyapunov);
    if !(lambda > cfg.min_lyapunov) {
        return Ok(Draw::Rejected(xi, format!("not chaotic (lambda {})", fmt(lambda))));
    }
    let from = cfg.sync_len + cfg.train_len;
    let window = data.segment(from..from + cfg.climate.steps.min(cfg.predict_len))?;
    let truth = TruthStats::measure(&window, lambda, &cfg.climate);
    Ok(Draw::Accepted(Accepted {
        index: 0,
        xi,
        data,
        truth,
    }))
}

fn xi_columns(xi: &[FracExponent; 3]) -> Vec<String> {
    xi.iter().map(|e| e.numerator().to_string()).collect()
}

pub(super) fn run(cfg: &ExponentSweepConfig, arity: Arity, seed: u64, out: &Path, resume: bool) -> Result<RunReport> {
    if cfg.numerator_step == 0 || cfg.numerator_min > cfg.numerator_max || cfg.numerator_min % 2 != 0 || cfg.numerator_step % 2 != 0 {
        return Err(Error::config("numerator range must be even, ascending and with a positive even step"));
    }
    let budget = cfg.trajectories * cfg.budget_factor.max(1);
    let mut accepted: Vec<Accepted> = Vec::new();
    let mut rejected = Table::new(&["draw", "xi1_num", "xi2_num", "xi3_num", "xi_den", "reason"], 1);
    let mut next = 0;
    // draw in parallel batches, consume in draw order
    while accepted.len() < cfg.trajectories && next < budget {
        let batch = (cfg.trajectories - accepted.len()).min(budget - next);
        let draws = (next..next + batch)
            .into_par_iter()
            .map(|k| attempt(cfg, arity, seed, k).map(|d| (k, d)))
            .collect::<Result<Vec<_>>>()?;
        next += batch;
        for (k, draw) in draws {
            match draw {
                Draw::Accepted(mut a) if accepted.len() < cfg.trajectories => {
                    a.index = accepted.len();
                    accepted.push(a);
                }
                Draw::Accepted(_) => {}
                Draw::Rejected(xi, reason) => {
                    log::info!("draw {k}: rejected {:?}: {reason}", xi_columns(&xi));
                    let mut row = vec![k.to_string()];
                    row.extend(xi_columns(&xi));
                    row.extend(["50".to_string(), reason]);
                    rejected.rows.push(row);
                }
            }
        }
    }
    let shortfall = cfg.trajectories - accepted.len();
    if shortfall > 0 {
        log::warn!("resampling budget exhausted: {} of {} trajectories", accepted.len(), cfg.trajectories);
    }

    let mut trajectories = Table::new(
        &["traj", "xi1_num", "xi2_num", "xi3_num", "xi_den", "xi_s", "xi_l", "lyap_true", "cdim_true"],
        1,
    );
    for a in &accepted {
        let mut row = vec![a.index.to_string()];
        row.extend(xi_columns(&a.xi));
        let (s, l) = bounds(&a.xi);
        row.extend([
            "50".into(),
            fmt(s),
            fmt(l),
            fmt(a.truth.lambda),
            fmt_opt(a.truth.cdim),
        ]);
        trajectories.rows.push(row);
    }

    let etas = cfg.eta_grid.resolve(None)?;
    let mut keys = Vec::new();
    let mut cells = Vec::new();
    for (t, a) in accepted.iter().enumerate() {
        for &eta in &etas {
            let mut key = vec![a.index.to_string()];
            key.extend(xi_columns(&a.xi));
            key.extend(["50".into(), eta.numerator().to_string(), eta.denominator().to_string()]);
            keys.push(key);
            cells.push((t, eta));
        }
    }
    let mut header = vec!["traj", "xi1_num", "xi2_num", "xi3_num", "xi_den", "eta_num", "eta_den", "rel"];
    header.extend(METRIC_COLUMNS);
    header.push("cdim_err");
    let (_, cells_run) = run_cells(&out.join("cells.csv"), &header, &keys, resume, |i| {
        let (t, eta) = cells[i];
        let a = &accepted[t];
        let outcome = evaluate_minrc(
            cfg.model.config(3, eta),
            &a.data,
            0,
            cfg.sync_len,
            cfg.train_len,
            cfg.predict_len,
            &a.truth,
            &cfg.climate,
        )?;
        let (s, l) = bounds(&a.xi);
        let rel = (l > s).then(|| (eta.value() - s) / (l - s));
        let mut cols = vec![fmt_opt(rel)];
        cols.extend(outcome.columns(&a.truth, &cfg.climate));
        cols.push(fmt_opt(outcome.cdim_error(&a.truth)));
        Ok(cols)
    })?;
    trajectories.write(&out.join("trajectories.csv"))?;
    rejected.write(&out.join("rejected.csv"))?;
    Ok(RunReport {
        cells: cells_run,
        shortfall,
        files: vec!["cells.csv".into(), "trajectories.csv".into(), "rejected.csv".into()],
    })
}

fn bounds(xi: &[FracExponent; 3]) -> (f64, f64) {
    let v = xi.map(|e| e.value());
    (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}
