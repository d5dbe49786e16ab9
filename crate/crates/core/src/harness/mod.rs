//! Experiment recipes, result persistence and provenance.
//!
//! Every recipe writes keyed CSV tables into an output directory together
//! with a `manifest.json`. Cells already present in a table are skipped
//! when resuming, and final tables are ordered by cell so reruns are
//! byte-identical.

mod common;
mod exponents;
mod fwhm;
mod generate;
mod library;
mod lyap_grid;
mod manifest;
mod probe_run;
mod sweep;
pub mod table;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use common::{ClimateSettings, EtaGrid, ModelTemplate};
pub use exponents::{ExponentSweepConfig, Arity};
pub use fwhm::{fwhm_widths, FwhmConfig, Width};
pub use generate::GenerateConfig;
pub use library::{LibraryArm, LibraryCompareConfig};
pub use lyap_grid::LyapGridConfig;
pub use manifest::Manifest;
pub use probe_run::{DataSource, ProbeRunConfig, ProbeTarget};
pub use sweep::{aggregate_sweep, EtaSweepConfig};
pub use table::{CellRun, Table};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case")]
pub enum Recipe {
    Generate(GenerateConfig),
    LyapGrid(LyapGridConfig),
    EtaSweep(EtaSweepConfig),
    TwoExponent(ExponentSweepConfig),
    ThreeExponent(ExponentSweepConfig),
    Probe(ProbeRunConfig),
    LibraryCompare(LibraryCompareConfig),
    Fwhm(FwhmConfig),
}

impl Recipe {
    pub fn name(&self) -> &'static str {
        match self {
            Recipe::Generate(_) => "generate",
            Recipe::LyapGrid(_) => "lyap_grid",
            Recipe::EtaSweep(_) => "eta_sweep",
            Recipe::TwoExponent(_) => "two_exponent",
            Recipe::ThreeExponent(_) => "three_exponent",
            Recipe::Probe(_) => "probe",
            Recipe::LibraryCompare(_) => "library_compare",
            Recipe::Fwhm(_) => "fwhm",
        }
    }

    /// The recipe with its desk-scale defaults.
    pub fn default_for(name: &str) -> Result<Self> {
        Ok(match name {
            "generate" => Recipe::Generate(GenerateConfig::default()),
            "lyap_grid" => Recipe::LyapGrid(LyapGridConfig::default()),
            "eta_sweep" => Recipe::EtaSweep(EtaSweepConfig::default()),
            "two_exponent" => Recipe::TwoExponent(ExponentSweepConfig::two()),
            "three_exponent" => Recipe::ThreeExponent(ExponentSweepConfig::three()),
            "probe" => Recipe::Probe(ProbeRunConfig::default()),
            "library_compare" => Recipe::LibraryCompare(LibraryCompareConfig::default()),
            "fwhm" => Recipe::Fwhm(FwhmConfig::default()),
            other => return Err(Error::config(format!("unknown recipe '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub recipe: Recipe,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    pub resume: bool,
}

/// What a recipe run produced.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunReport {
    pub cells: CellRun,
    /// Parameter draws rejected (three/two-exponent recipes) or similar
    /// shortfalls that leave a table incomplete.
    pub shortfall: usize,
    pub files: Vec<String>,
}

impl RunReport {
    pub fn is_partial(&self) -> bool {
        self.cells.failed > 0 || self.shortfall > 0
    }
}

/// Runs `cfg` into `out`, writing tables and a manifest.
pub fn run(cfg: &ExperimentConfig, out: &Path, opts: RunOptions) -> Result<RunReport> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let seed = cfg.seed;
    let report = pool.install(|| match &cfg.recipe {
        Recipe::Generate(c) => generate::run(c, seed, out),
        Recipe::LyapGrid(c) => lyap_grid::run(c, seed, out, opts.resume),
        Recipe::EtaSweep(c) => sweep::run(c, seed, out, opts.resume),
        Recipe::TwoExponent(c) => exponents::run(c, Arity::Two, seed, out, opts.resume),
        Recipe::ThreeExponent(c) => exponents::run(c, Arity::Three, seed, out, opts.resume),
        Recipe::Probe(c) => probe_run::run(c, seed, out, opts.resume),
        Recipe::LibraryCompare(c) => library::run(c, seed, out, opts.resume),
        Recipe::Fwhm(c) => fwhm::run(c, out),
    })?;
    Manifest::new(cfg, &report)?.write(&out.join("manifest.json"))?;
    Ok(report)
}
