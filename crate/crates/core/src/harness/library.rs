use std::path::Path;

use serde::{Deserialize, Serialize};

use super::common::true_lambda;
use super::table::{fmt, fmt_opt, run_cells, Table};
use super::RunReport;
use crate::classic_rc::{ClassicRc, ClassicRcConfig, FractionalLibrary};
use crate::dynamics::simulate;
use crate::error::{Error, Result};
use crate::metrics::{forecast_horizon_with_threshold, LyapunovConfig, PeriodEstimate};
use crate::readout::ReservoirModel;
use crate::rng::derive_seed;
use crate::{IntegratorConfig, SystemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryArm {
    pub name: String,
    pub reservoir_dim: usize,
    pub library: FractionalLibrary,
}

/// Paired comparison of echo-state networks with and without a fractional
/// readout library on the Lorenz system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LibraryCompareConfig {
    pub arms: Vec<LibraryArm>,
    pub repetitions: usize,
    pub sync_len: usize,
    pub train_len: usize,
    pub predict_len: usize,
    pub transient: usize,
    pub spectral_radius: f64,
    pub ridge: f64,
    pub edge_probability: f64,
    pub input_scale: f64,
    pub lyapunov_len: usize,
    pub lyapunov: LyapunovConfig,
    pub integrator: IntegratorConfig,
}

impl Default for LibraryCompareConfig {
    fn default() -> Self {
        LibraryCompareConfig {
            arms: vec![
                LibraryArm {
                    name: "plain_100".into(),
                    reservoir_dim: 100,
                    library: FractionalLibrary::linear(),
                },
                LibraryArm {
                    name: "fractional_100".into(),
                    reservoir_dim: 100,
                    library: FractionalLibrary::spaced(3).expect("static library"),
                },
                LibraryArm {
                    name: "plain_1100".into(),
                    reservoir_dim: 1100,
                    library: FractionalLibrary::linear(),
                },
            ],
            repetitions: 100,
            sync_len: 1000,
            train_len: 4000,
            predict_len: 3000,
            transient: 5000,
            spectral_radius: 0.2,
            ridge: 1e-4,
            edge_probability: 0.1,
            input_scale: 0.5,
            lyapunov_len: 20_000,
            lyapunov: LyapunovConfig {
                period: PeriodEstimate::MeanFrequency,
                ..LyapunovConfig::default()
            },
            integrator: IntegratorConfig::default(),
        }
    }
}

pub(super) fn run(cfg: &LibraryCompareConfig, seed: u64, out: &Path, resume: bool) -> Result<RunReport> {
    if cfg.arms.is_empty() || cfg.repetitions == 0 {
        return Err(Error::config("need at least one arm and one repetition"));
    }
    let lorenz = SystemSpec::lorenz();
    let reference = simulate(
        &lorenz,
        lorenz.default_initial_condition(derive_seed(seed, u64::MAX)),
        cfg.transient,
        cfg.lyapunov_len,
        &cfg.integrator,
    )?;
    let lambda = true_lambda(&reference, &cfg.lyapunov);
    let lambda = if lambda.is_finite() { lambda } else { 0.0 };

    let mut keys = Vec::new();
    let mut cells = Vec::new();
    for rep in 0..cfg.repetitions {
        for (a, arm) in cfg.arms.iter().enumerate() {
            keys.push(vec![rep.to_string(), arm.name.clone()]);
            cells.push((rep, a));
        }
    }
    let header = ["rep", "arm", "reservoir_dim", "features", "diverged", "fh_steps", "fh_lyap"];
    let (table, cells_run) = run_cells(&out.join("cells.csv"), &header, &keys, resume, |i| {
        let (rep, a) = cells[i];
        let arm = &cfg.arms[a];
        // the data draw and the network seed are shared by every arm
        let rep_seed = derive_seed(seed, rep as u64);
        let data = simulate(
            &lorenz,
            lorenz.default_initial_condition(derive_seed(rep_seed, 0)),
            cfg.transient,
            cfg.sync_len + cfg.train_len + cfg.predict_len,
            &cfg.integrator,
        )?;
        let head = data.segment(0..cfg.sync_len + cfg.train_len)?;
        let future = data.segment(cfg.sync_len + cfg.train_len..data.len())?;
        let model = ClassicRc::build(ClassicRcConfig {
            input_dim: 3,
            reservoir_dim: arm.reservoir_dim,
            spectral_radius: cfg.spectral_radius,
            ridge: cfg.ridge,
            edge_probability: cfg.edge_probability,
            input_scale: cfg.input_scale,
            library: arm.library.clone(),
            seed: derive_seed(rep_seed, 1),
        })?;
        let readout = model.train(&head, cfg.sync_len)?;
        let pred = model.predict(&readout, &head, cfg.predict_len)?;
        let fh = forecast_horizon_with_threshold(&future, pred.as_slice(), &future.std(), lambda)?;
        Ok(vec![
            arm.reservoir_dim.to_string(),
            model.feature_dim().to_string(),
            pred.diverged().to_string(),
            fh.steps.to_string(),
            fmt_opt(fh.lyapunov_times),
        ])
    })?;

    let mut summary = Table::new(
        &["arm", "runs", "mean_fh_lyap", "std_fh_lyap", "sem_fh_lyap", "mean_fh_steps", "std_fh_steps", "sem_fh_steps"],
        1,
    );
    for arm in &cfg.arms {
        let rows: Vec<&Vec<String>> = table.rows.iter().filter(|r| r[1] == arm.name).collect();
        let column = |name: &str| -> Vec<f64> { rows.iter().filter_map(|r| table.num(r, name)).collect() };
        let mut row = vec![arm.name.clone(), rows.len().to_string()];
        for values in [column("fh_lyap"), column("fh_steps")] {
            let (mean, std, sem) = mean_std_sem(&values);
            row.extend([fmt(mean), fmt(std), fmt(sem)]);
        }
        summary.rows.push(row);
    }
    summary.write(&out.join("summary.csv"))?;
    Ok(RunReport {
        cells: cells_run,
        shortfall: 0,
        files: vec!["cells.csv".into(), "summary.csv".into()],
    })
}

/// Mean, sample standard deviation and standard error; NaN where undefined.
fn mean_std_sem(v: &[f64]) -> (f64, f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN, f64::NAN);
    }
    let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    (mean, std, std / n.sqrt())
}
