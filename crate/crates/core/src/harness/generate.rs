use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunReport;
use crate::dynamics::simulate;
use crate::error::{Error, Result};
use crate::{IntegratorConfig, SystemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateConfig {
    pub system: SystemSpec,
    pub initial_condition: Option<[f64; 3]>,
    pub transient: usize,
    pub steps: usize,
    pub integrator: IntegratorConfig,
    pub file: String,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            system: SystemSpec::lorenz(),
            initial_condition: None,
            transient: 10_000,
            steps: 50_000,
            integrator: IntegratorConfig::default(),
            file: "trajectory.csv".into(),
        }
    }
}

pub(super) fn run(cfg: &GenerateConfig, seed: u64, out: &Path) -> Result<RunReport> {
    let x0 = cfg.initial_condition.unwrap_or_else(|| cfg.system.default_initial_condition(seed));
    let traj = simulate(&cfg.system, x0, cfg.transient, cfg.steps, &cfg.integrator)?;
    let path = out.join(&cfg.file);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    traj.write_csv(BufWriter::new(file))?;
    Ok(RunReport {
        files: vec![cfg.file.clone()],
        ..RunReport::default()
    })
}
