//! Estimating the smallest nonlinearity in a time series.
//!
//! The probe sweeps the minimal reservoir's readout exponent upward and
//! reports the first one whose closed-loop prediction reproduces the data's
//! correlation dimension while standing apart from the same pipeline run on
//! phase-randomized surrogates.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{exponent_grid, format_f64};
use crate::error::{Error, Result};
use crate::metrics::{correlation_dimension, radius_range, CorrelationConfig};
use crate::minimal_rc::{MinRc, MinRcConfig};
use crate::surrogates::surrogate_background;
use crate::{FracExponent, Trajectory};

/// Which grid points get a surrogate background.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundMode {
    /// Matching exponents in ascending order, stopping at the first one
    /// outside the band.
    #[default]
    UntilFound,
    /// Every exponent whose prediction matches the data.
    Matching,
    /// Every exponent.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub eta_grid: Vec<FracExponent>,
    /// Template; its exponent list is replaced by each grid point.
    pub minrc: MinRcConfig,
    pub sync_len: usize,
    pub train_len: usize,
    pub predict_len: usize,
    pub surrogate_count: usize,
    pub match_tol: f64,
    /// Half-width of the surrogate band in standard deviations.
    #[serde(default = "one")]
    pub band_width: f64,
    #[serde(default)]
    pub background: BackgroundMode,
    #[serde(default)]
    pub correlation: CorrelationConfig,
    /// Measure predictions on the data's radius grid instead of their own.
    #[serde(default = "yes")]
    pub data_radii: bool,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl ProbeConfig {
    /// Numerators 52..=280 in steps of 2 over 50.
    pub fn default_grid() -> Vec<FracExponent> {
        exponent_grid(52, 280, 2, 50).expect("static grid is valid")
    }

    /// Settings for multivariate chaotic flows sampled at `dt = 0.01`.
    pub fn chaotic(input_dim: usize, seed: u64) -> Self {
        ProbeConfig {
            eta_grid: Self::default_grid(),
            minrc: MinRcConfig::reduced(input_dim, 3, 0.1, 1e-6, FracExponent::integer(2).expect("2 is valid")),
            sync_len: 100,
            train_len: 1000,
            predict_len: 10_000,
            surrogate_count: 20,
            match_tol: 0.15,
            band_width: 1.0,
            background: BackgroundMode::UntilFound,
            correlation: CorrelationConfig::default(),
            data_radii: true,
            seed,
        }
    }

    /// Settings for daily returns.
    pub fn financial(seed: u64) -> Self {
        ProbeConfig {
            minrc: MinRcConfig::reduced(1, 5, 0.99, 1e-6, FracExponent::integer(2).expect("2 is valid")),
            sync_len: 500,
            train_len: 3000,
            predict_len: 5000,
            ..Self::chaotic(1, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta_grid.is_empty() {
            return Err(Error::config("eta_grid is empty"));
        }
        if self.eta_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("eta_grid must be strictly increasing"));
        }
        if !(self.match_tol > 0.0) {
            return Err(Error::config("match_tol must be positive"));
        }
        if !(self.band_width >= 0.0) {
            return Err(Error::config("band_width must be non-negative"));
        }
        if self.train_len < 2 || self.predict_len < 2 {
            return Err(Error::config("train_len and predict_len must be at least 2"));
        }
        if self.surrogate_count < 2 {
            return Err(Error::config("surrogate_count must be at least 2"));
        }
        self.minrc.validate()?;
        self.correlation.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaRecord {
    pub eta: FracExponent,
    /// Absent when the prediction diverged or its dimension was undefined.
    pub cdim_pred: Option<f64>,
    pub surrogate_mean: Option<f64>,
    pub surrogate_std: Option<f64>,
    pub outside_band: bool,
    pub matches_true: bool,
}

impl EtaRecord {
    pub fn qualifies(&self) -> bool {
        self.matches_true && self.outside_band
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Found,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub cdim_true: f64,
    pub records: Vec<EtaRecord>,
    pub mu_recon: Option<FracExponent>,
    pub verdict: Verdict,
}

impl ProbeReport {
    pub fn record(&self, eta: FracExponent) -> Option<&EtaRecord> {
        self.records.iter().find(|r| r.eta == eta)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    /// Columns `eta_num, eta_den, cdim_pred, sur_mean, sur_std, outside, match`;
    /// undefined values are empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["eta_num", "eta_den", "cdim_pred", "sur_mean", "sur_std", "outside", "match"])?;
        let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.eta.numerator().to_string(),
                r.eta.denominator().to_string(),
                opt(r.cdim_pred),
                opt(r.surrogate_mean),
                opt(r.surrogate_std),
                r.outside_band.to_string(),
                r.matches_true.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<probe csv>", e))?;
        Ok(())
    }
}

/// Train at `eta` on the head of `series`, predict, and measure the
/// prediction's correlation dimension.
fn predicted_dimension(series: &Trajectory, eta: FracExponent, cfg: &ProbeConfig, cdim: &CorrelationConfig) -> Result<f64> {
    let model = MinRc::build(cfg.minrc.with_exponents(vec![eta]))?;
    let head = series.segment(0..cfg.sync_len + cfg.train_len)?;
    let readout = model.train(&head, cfg.sync_len)?;
    let pred = model.predict(&readout, &head, cfg.predict_len)?;
    if let Some(k) = pred.diverged_at() {
        return Err(Error::Diverged {
            time: k as f64 * series.dt(),
            reason: "closed-loop prediction",
        });
    }
    correlation_dimension(&pred.into_trajectory()?, cdim)
}

pub fn probe_smallest_nonlinearity(series: &Trajectory, cfg: &ProbeConfig) -> Result<ProbeReport> {
    cfg.validate()?;
    if series.dim() != cfg.minrc.input_dim {
        return Err(Error::config(format!(
            "series has {} coordinates, model expects {}",
            series.dim(),
            cfg.minrc.input_dim
        )));
    }
    if series.len() < cfg.sync_len + cfg.train_len + 1 {
        return Err(Error::InsufficientData(format!(
            "probe needs {} rows, got {}",
            cfg.sync_len + cfg.train_len + 1,
            series.len()
        )));
    }
    let cdim_true = correlation_dimension(series, &cfg.correlation)?;
    let pred_cdim = if cfg.data_radii {
        CorrelationConfig {
            radius_range: Some(radius_range(series, &cfg.correlation)?),
            ..cfg.correlation.clone()
        }
    } else {
        cfg.correlation.clone()
    };

    let predicted: Vec<Option<f64>> = cfg
        .eta_grid
        .par_iter()
        .map(|&eta| match predicted_dimension(series, eta, cfg, &pred_cdim) {
            Ok(c) => Some(c),
            Err(e) => {
                log::debug!("eta {eta}: {e}");
                None
            }
        })
        .collect();
    let matches: Vec<bool> = predicted
        .iter()
        .map(|c| c.is_some_and(|c| (c - cdim_true).abs() <= cfg.match_tol))
        .collect();

    let background = |eta: FracExponent| {
        surrogate_background(series, cfg.surrogate_count, cfg.seed, |s| predicted_dimension(s, eta, cfg, &pred_cdim))
    };
    let mut bands: Vec<Option<Result<(f64, f64)>>> = (0..cfg.eta_grid.len()).map(|_| None).collect();
    let band = |r: Result<crate::surrogates::SurrogateBackground>| r.map(|b| (b.mean, b.std));
    match cfg.background {
        BackgroundMode::UntilFound => {
            for (i, &eta) in cfg.eta_grid.iter().enumerate() {
                if !matches[i] {
                    continue;
                }
                let b = band(background(eta));
                let outside = match (&b, predicted[i]) {
                    (Ok((m, s)), Some(c)) => (c - m).abs() > cfg.band_width * s,
                    _ => true,
                };
                bands[i] = Some(b);
                if outside {
                    break;
                }
            }
        }
        BackgroundMode::Matching | BackgroundMode::All => {
            let wanted: Vec<usize> = (0..cfg.eta_grid.len())
                .filter(|&i| cfg.background == BackgroundMode::All || matches[i])
                .collect();
            let computed: Vec<(usize, Result<(f64, f64)>)> = wanted
                .into_par_iter()
                .map(|i| (i, band(background(cfg.eta_grid[i]))))
                .collect();
            for (i, b) in computed {
                bands[i] = Some(b);
            }
        }
    }

    let records: Vec<EtaRecord> = cfg
        .eta_grid
        .iter()
        .enumerate()
        .map(|(i, &eta)| {
            let (surrogate_mean, surrogate_std, outside_band) = match (&bands[i], predicted[i]) {
                (Some(Ok((m, s))), Some(c)) => (Some(*m), Some(*s), (c - m).abs() > cfg.band_width * s),
                (Some(Ok((m, s))), None) => (Some(*m), Some(*s), false),
                // an undefined surrogate background cannot contain the prediction
                (Some(Err(e)), c) => {
                    log::debug!("eta {eta}: surrogate background failed: {e}");
                    (None, None, c.is_some())
                }
                (None, _) => (None, None, false),
            };
            EtaRecord {
                eta,
                cdim_pred: predicted[i],
                surrogate_mean,
                surrogate_std,
                outside_band,
                matches_true: matches[i],
            }
        })
        .collect();
    let mu_recon = records.iter().find(|r| r.qualifies()).map(|r| r.eta);
    Ok(ProbeReport {
        cdim_true,
        records,
        mu_recon,
        verdict: if mu_recon.is_some() {
            Verdict::Found
        } else {
            Verdict::Failed
        },
    })
}

/// Simple returns `(pₜ - pₜ₋₁) / pₜ₋₁` of a price column, with the count of
/// rows dropped for missing or unparseable values.
pub fn returns_from_reader<R: Read>(reader: R, column: &str) -> Result<(Trajectory, usize)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| Error::config(format!("column '{column}' not found")))?;
    let mut prices = Vec::new();
    let mut dropped = 0;
    for record in rdr.records() {
        let record = record?;
        match record.get(idx).and_then(|v| v.trim().parse::<f64>().ok()) {
            Some(p) if p.is_finite() => prices.push(p),
            _ => dropped += 1,
        }
    }
    if prices.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "column '{column}' has {} usable prices, need at least 3",
            prices.len()
        )));
    }
    let returns: Vec<f64> = prices.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect();
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("return after a zero price".into()));
    }
    Ok((Trajectory::from_series(returns, 1.0)?, dropped))
}

/// Daily returns of `column` in the CSV file at `path`, sampled with `dt = 1`.
pub fn ingest_returns(path: impl AsRef<Path>, column: &str) -> Result<Trajectory> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let (series, dropped) = returns_from_reader(file, column)?;
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} rows without a usable '{column}' value", path.display());
    }
    Ok(series)
}
