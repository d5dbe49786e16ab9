use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use fracrc::harness::{self, ExperimentConfig, Recipe, RunOptions};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "fracrc", version, about = "Run reservoir-computing experiments with fractional nonlinearities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a system and write its trajectory.
    Generate(RunArgs),
    /// Largest Lyapunov exponent over an (a, ξ) grid of the fractional Halvorsen system.
    LyapGrid(RunArgs),
    /// Forecast horizon over data and model exponents.
    EtaSweep(RunArgs),
    /// Model-exponent sweep over random ξ₁ = ξ₂ ≠ ξ₃ Halvorsen systems.
    TwoExp(RunArgs),
    /// Model-exponent sweep over random three-exponent Halvorsen systems.
    ThreeExp(RunArgs),
    /// Smallest-nonlinearity probe against surrogate data.
    Probe(RunArgs),
    /// Plain, fractional-library and large echo-state networks on Lorenz.
    LibraryCompare(RunArgs),
    /// Full width at a fraction of the peak of a sweep summary.
    Fwhm(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration; recipe defaults are used for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Keep completed cells from an earlier run in the output directory.
    #[arg(long)]
    resume: bool,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

impl Command {
    fn split(self) -> (&'static str, RunArgs) {
        match self {
            Command::Generate(a) => ("generate", a),
            Command::LyapGrid(a) => ("lyap_grid", a),
            Command::EtaSweep(a) => ("eta_sweep", a),
            Command::TwoExp(a) => ("two_exponent", a),
            Command::ThreeExp(a) => ("three_exponent", a),
            Command::Probe(a) => ("probe", a),
            Command::LibraryCompare(a) => ("library_compare", a),
            Command::Fwhm(a) => ("fwhm", a),
        }
    }
}

fn load_config(recipe: &str, path: Option<&Path>, seed: Option<u64>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match path {
        None => ExperimentConfig {
            recipe: Recipe::default_for(recipe)?,
            seed: 0,
        },
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let Some(obj) = value.as_object_mut() else {
                bail!("{}: configuration must be a JSON object", path.display());
            };
            match obj.get("recipe") {
                None => {
                    obj.insert("recipe".into(), Value::from(recipe));
                }
                Some(Value::String(r)) if r == recipe => {}
                Some(other) => bail!("{}: recipe {other} does not match subcommand '{recipe}'", path.display()),
            }
            serde_json::from_value(value).with_context(|| format!("{}: invalid configuration", path.display()))?
        }
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (recipe, args) = Cli::parse().command.split();
    let cfg = match load_config(recipe, args.config.as_deref(), args.seed) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if args.print_config {
        match cfg.to_json() {
            Ok(json) => {
                // a closed pipe (`| head`) is not an error
                let _ = writeln!(std::io::stdout(), "{json}");
                return ExitCode::SUCCESS;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    }
    let opts = RunOptions {
        jobs: args.jobs,
        resume: args.resume,
    };
    match harness::run(&cfg, &args.out, opts) {
        Ok(report) => {
            log::info!(
                "{}: {} cells computed, {} resumed, {} failed; wrote {} to {}",
                recipe,
                report.cells.completed,
                report.cells.resumed,
                report.cells.failed,
                report.files.join(", "),
                args.out.display()
            );
            if report.is_partial() {
                if report.shortfall > 0 {
                    log::warn!("{} requested items could not be produced", report.shortfall);
                }
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
