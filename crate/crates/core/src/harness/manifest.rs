use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ExperimentConfig, RunReport};
use crate::error::{Error, Result};

/// Provenance written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub recipe: String,
    pub seed: u64,
    pub config_sha256: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub completed_cells: usize,
    pub resumed_cells: usize,
    pub failed_cells: usize,
    pub shortfall: usize,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig, report: &RunReport) -> Result<Self> {
        let canonical = serde_json::to_vec(cfg)?;
        let digest = Sha256::digest(&canonical);
        Ok(Manifest {
            recipe: cfg.recipe.name().to_string(),
            seed: cfg.seed,
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            config: cfg.clone(),
            completed_cells: report.cells.completed,
            resumed_cells: report.cells.resumed,
            failed_cells: report.cells.failed,
            shortfall: report.shortfall,
            files: report.files.clone(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}
