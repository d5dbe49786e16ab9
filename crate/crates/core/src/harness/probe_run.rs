use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::table::{fmt, run_cells};
use super::RunReport;
use crate::dynamics::simulate;
use crate::error::{Error, Result};
use crate::probe::{ingest_returns, probe_smallest_nonlinearity, ProbeConfig, Verdict};
use crate::rng::derive_seed;
use crate::{IntegratorConfig, SystemSpec, Trajectory};

/// Where a probe's series comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    System {
        system: SystemSpec,
        #[serde(default)]
        initial_condition: Option<[f64; 3]>,
        transient: usize,
        length: usize,
        #[serde(default)]
        integrator: IntegratorConfig,
    },
    /// Simple returns of a price column.
    Returns { path: PathBuf, column: String },
    /// A trajectory CSV as written by the `generate` recipe.
    Trajectory { path: PathBuf },
}

impl DataSource {
    pub fn load(&self, seed: u64) -> Result<Trajectory> {
        match self {
            DataSource::System {
                system,
                initial_condition,
                transient,
                length,
                integrator,
            } => {
                let x0 = initial_condition.unwrap_or_else(|| system.default_initial_condition(seed));
                simulate(system, x0, *transient, *length, integrator)
            }
            DataSource::Returns { path, column } => ingest_returns(path, column),
            DataSource::Trajectory { path } => {
                let f = File::open(path).map_err(|e| Error::io(path, e))?;
                Trajectory::read_csv(f)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTarget {
    pub name: String,
    pub source: DataSource,
    /// Its `seed` is replaced by one derived from the run seed.
    pub probe: ProbeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRunConfig {
    pub targets: Vec<ProbeTarget>,
}

impl Default for ProbeRunConfig {
    fn default() -> Self {
        let system = |name: &str, system: SystemSpec, dt: f64, transient: usize| ProbeTarget {
            name: name.into(),
            source: DataSource::System {
                system,
                initial_condition: None,
                transient,
                length: 11_100,
                integrator: IntegratorConfig {
                    dt_sample: dt,
                    ..IntegratorConfig::default()
                },
            },
            probe: ProbeConfig::chaotic(3, 0),
        };
        ProbeRunConfig {
            targets: vec![
                system("lorenz", SystemSpec::lorenz(), 0.01, 5000),
                system("halvorsen", SystemSpec::halvorsen_classic(), 0.01, 5000),
                system("thomas", SystemSpec::thomas(), 0.2, 1000),
            ],
        }
    }
}

pub(super) fn run(cfg: &ProbeRunConfig, seed: u64, out: &Path, resume: bool) -> Result<RunReport> {
    for t in &cfg.targets {
        if t.name.is_empty() || t.name.contains(['/', '\\']) {
            return Err(Error::config(format!("invalid probe target name '{}'", t.name)));
        }
    }
    let keys: Vec<Vec<String>> = cfg.targets.iter().map(|t| vec![t.name.clone()]).collect();
    let header = ["name", "cdim_true", "mu_num", "mu_den", "mu", "verdict"];
    let (_, cells) = run_cells(&out.join("probe_summary.csv"), &header, &keys, resume, |i| {
        let target = &cfg.targets[i];
        let target_seed = derive_seed(seed, i as u64);
        let series = target.source.load(target_seed)?;
        let probe = ProbeConfig {
            seed: target_seed,
            ..target.probe.clone()
        };
        let report = probe_smallest_nonlinearity(&series, &probe)?;
        let json = out.join(format!("{}.json", target.name));
        report.write_json(BufWriter::new(File::create(&json).map_err(|e| Error::io(&json, e))?))?;
        let csv = out.join(format!("{}.csv", target.name));
        report.write_csv(BufWriter::new(File::create(&csv).map_err(|e| Error::io(&csv, e))?))?;
        let (num, den, mu) = match report.mu_recon {
            Some(m) => (m.numerator().to_string(), m.denominator().to_string(), fmt(m.value())),
            None => Default::default(),
        };
        let verdict = match report.verdict {
            Verdict::Found => "found",
            Verdict::Failed => "failed",
        };
        Ok(vec![fmt(report.cdim_true), num, den, mu, verdict.into()])
    })?;
    let mut files = vec!["probe_summary.csv".to_string()];
    for t in &cfg.targets {
        files.push(format!("{}.json", t.name));
        files.push(format!("{}.csv", t.name));
    }
    Ok(RunReport {
        cells,
        shortfall: 0,
        files,
    })
}
