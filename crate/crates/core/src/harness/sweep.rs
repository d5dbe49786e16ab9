use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::common::{
    evaluate_minrc, exponent_columns, float_key, true_lambda, ClimateSettings, EtaGrid, ModelTemplate, TruthStats,
    METRIC_COLUMNS,
};
use super::table::{fmt, fmt_opt, run_cells, Table};
use super::RunReport;
use crate::dynamics::simulate;
use crate::error::{Error, Result};
use crate::metrics::LyapunovConfig;
use crate::rng::{derive_seed, stream, stream_rng};
use crate::{FracExponent, IntegratorConfig, SystemSpec, Trajectory};

/// Forecast horizon and climate over a (data exponent × model exponent ×
/// realization) factorial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EtaSweepConfig {
    /// Data source. With a non-empty `xi_grid` it must be the fractional
    /// Halvorsen system, whose exponents are then set uniformly per cell.
    pub system: SystemSpec,
    pub xi_grid: Vec<FracExponent>,
    pub eta_grid: EtaGrid,
    pub model: ModelTemplate,
    pub realizations: usize,
    pub sync_len: usize,
    pub train_len: usize,
    pub predict_len: usize,
    pub transient: usize,
    /// Realization `k` starts at `k · spacing` plus a seeded jitter below
    /// `spacing`.
    pub spacing: usize,
    /// Rows used to estimate the true λ for each data exponent.
    pub lyapunov_len: usize,
    pub lyapunov: LyapunovConfig,
    pub initial_condition: Option<[f64; 3]>,
    pub integrator: IntegratorConfig,
    pub climate: ClimateSettings,
}

impl Default for EtaSweepConfig {
    fn default() -> Self {
        let xi = |n| FracExponent::new(n, 50).expect("static exponent");
        EtaSweepConfig {
            system: SystemSpec::halvorsen_uniform(3.98, xi(132)),
            xi_grid: vec![xi(132), xi(160), xi(200)],
            eta_grid: EtaGrid::Window { half_steps: 12, step: 2 },
            model: ModelTemplate::default(),
            realizations: 5,
            sync_len: 1000,
            train_len: 5000,
            predict_len: 100_000,
            transient: 10_000,
            spacing: 10_000,
            lyapunov_len: 40_000,
            lyapunov: LyapunovConfig::default(),
            initial_condition: None,
            integrator: IntegratorConfig::default(),
            climate: ClimateSettings {
                enabled: false,
                ..ClimateSettings::default()
            },
        }
    }
}

const KEY: [&str; 6] = ["xi_num", "xi_den", "eta_num", "eta_den", "rho", "realization"];

pub(crate) fn with_uniform_exponent(system: &SystemSpec, xi: FracExponent) -> Result<SystemSpec> {
    match system {
        SystemSpec::FractionalHalvorsen { a, .. } => Ok(SystemSpec::halvorsen_uniform(*a, xi)),
        other => Err(Error::config(format!(
            "an exponent grid needs the fractional Halvorsen system, got {}",
            other.name()
        ))),
    }
}

struct Stratum {
    xi: Option<FracExponent>,
    data: Trajectory,
    starts: Vec<usize>,
    truths: Vec<TruthStats>,
}

fn prepare(cfg: &EtaSweepConfig, seed: u64, xi: Option<FracExponent>) -> Result<Stratum> {
    let system = match xi {
        Some(xi) => with_uniform_exponent(&cfg.system, xi)?,
        None => cfg.system.clone(),
    };
    let cell_len = cfg.sync_len + cfg.train_len + cfg.predict_len;
    let len = (cfg.realizations * cfg.spacing + cell_len).max(cfg.lyapunov_len);
    let x0 = cfg.initial_condition.unwrap_or_else(|| system.default_initial_condition(seed));
    let data = simulate(&system, x0, cfg.transient, len, &cfg.integrator)?;
    let lambda = true_lambda(&data.segment(0..cfg.lyapunov_len.min(len))?, &cfg.lyapunov);
    let mut starts = Vec::with_capacity(cfg.realizations);
    let mut truths = Vec::with_capacity(cfg.realizations);
    for k in 0..cfg.realizations {
        let jitter = if cfg.spacing > 1 {
            stream_rng(derive_seed(seed, k as u64), stream::DATA_OFFSET).random_range(0..cfg.spacing)
        } else {
            0
        };
        let start = k * cfg.spacing + jitter;
        let from = start + cfg.sync_len + cfg.train_len;
        let window = data.segment(from..from + cfg.climate.steps.min(cfg.predict_len))?;
        starts.push(start);
        truths.push(TruthStats::measure(&window, lambda, &cfg.climate));
    }
    Ok(Stratum {
        xi,
        data,
        starts,
        truths,
    })
}

pub(super) fn run(cfg: &EtaSweepConfig, seed: u64, out: &Path, resume: bool) -> Result<RunReport> {
    if cfg.realizations == 0 || cfg.train_len < 2 {
        return Err(Error::config("realizations and train_len must be positive"));
    }
    let xis: Vec<Option<FracExponent>> = if cfg.xi_grid.is_empty() {
        vec![None]
    } else {
        cfg.xi_grid.iter().copied().map(Some).collect()
    };
    let strata = xis
        .par_iter()
        .map(|&xi| prepare(cfg, seed, xi))
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    let mut keys = Vec::new();
    for (s, stratum) in strata.iter().enumerate() {
        for eta in cfg.eta_grid.resolve(stratum.xi)? {
            for r in 0..cfg.realizations {
                let [xn, xd] = exponent_columns(stratum.xi);
                keys.push(vec![
                    xn,
                    xd,
                    eta.numerator().to_string(),
                    eta.denominator().to_string(),
                    float_key(cfg.model.spectral_radius),
                    r.to_string(),
                ]);
                cells.push((s, eta, r));
            }
        }
    }
    let header: Vec<&str> = KEY.iter().chain(METRIC_COLUMNS.iter()).copied().collect();
    let path = out.join("cells.csv");
    let (table, cells_run) = run_cells(&path, &header, &keys, resume, |i| {
        let (s, eta, r) = cells[i];
        let stratum = &strata[s];
        let outcome = evaluate_minrc(
            cfg.model.config(stratum.data.dim(), eta),
            &stratum.data,
            stratum.starts[r],
            cfg.sync_len,
            cfg.train_len,
            cfg.predict_len,
            &stratum.truths[r],
            &cfg.climate,
        )?;
        Ok(outcome.columns(&stratum.truths[r], &cfg.climate))
    })?;
    aggregate_sweep(&table)?.write(&out.join("summary.csv"))?;
    Ok(RunReport {
        cells: cells_run,
        shortfall: 0,
        files: vec!["cells.csv".into(), "summary.csv".into()],
    })
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Per (data exponent, model exponent) means over realizations, with the
/// mean horizon normalized by its peak within each data exponent.
pub fn aggregate_sweep(cells: &Table) -> Result<Table> {
    let col = |name: &str| {
        cells
            .column(name)
            .ok_or_else(|| Error::config(format!("sweep table lacks column '{name}'")))
    };
    let (xn, xd, en, ed) = (col("xi_num")?, col("xi_den")?, col("eta_num")?, col("eta_den")?);
    col("fh_steps")?;
    let mut order: Vec<[String; 4]> = Vec::new();
    let mut groups: HashMap<[String; 4], Vec<&Vec<String>>> = HashMap::new();
    for row in &cells.rows {
        let key = [row[xn].clone(), row[xd].clone(), row[en].clone(), row[ed].clone()];
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(row);
    }
    struct Agg {
        runs: usize,
        diverged: usize,
        fh: f64,
        fh_lyap: Option<f64>,
        cdim_err: Option<f64>,
        success: Option<f64>,
    }
    let mut aggs = Vec::with_capacity(order.len());
    for key in &order {
        let rows = &groups[key];
        let nums = |name: &str| -> Vec<f64> { rows.iter().filter_map(|r| cells.num(r, name)).collect() };
        let fh = nums("fh_steps");
        let lyap = nums("fh_lyap");
        let mut errs: Vec<f64> = rows
            .iter()
            .filter_map(|r| Some((cells.num(r, "cdim_pred")? - cells.num(r, "cdim_true")?).abs()))
            .collect();
        let succ: Vec<bool> = rows
            .iter()
            .filter_map(|r| cells.get(r, "success").and_then(|v| v.parse().ok()))
            .collect();
        aggs.push(Agg {
            runs: rows.len(),
            diverged: rows.iter().filter(|r| cells.get(r, "diverged") == Some("true")).count(),
            fh: fh.iter().sum::<f64>() / fh.len().max(1) as f64,
            fh_lyap: (!lyap.is_empty()).then(|| lyap.iter().sum::<f64>() / lyap.len() as f64),
            cdim_err: median(&mut errs),
            success: (!succ.is_empty()).then(|| succ.iter().filter(|&&s| s).count() as f64 / succ.len() as f64),
        });
    }
    let mut peak: HashMap<[String; 2], f64> = HashMap::new();
    for (key, a) in order.iter().zip(&aggs) {
        let p = peak.entry([key[0].clone(), key[1].clone()]).or_insert(0.0);
        *p = p.max(a.fh);
    }
    let mut table = Table::new(
        &[
            "xi_num",
            "xi_den",
            "eta_num",
            "eta_den",
            "runs",
            "diverged",
            "mean_fh_steps",
            "mean_fh_lyap",
            "rel_fh",
            "median_cdim_err",
            "success_rate",
        ],
        4,
    );
    for (key, a) in order.iter().zip(&aggs) {
        let p = peak[&[key[0].clone(), key[1].clone()]];
        let mut row = key.to_vec();
        row.extend([
            a.runs.to_string(),
            a.diverged.to_string(),
            fmt(a.fh),
            fmt_opt(a.fh_lyap),
            fmt_opt((p > 0.0).then(|| a.fh / p)),
            fmt_opt(a.cdim_err),
            fmt_opt(a.success),
        ]);
        table.rows.push(row);
    }
    Ok(table)
}
