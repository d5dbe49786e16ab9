use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::table::{fmt_opt, Table};
use super::RunReport;
use crate::error::{Error, Result};

/// Peak widths of a sweep summary at a fraction of each peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FwhmConfig {
    /// Summary table written by the eta sweep, relative to the working
    /// directory.
    pub input: PathBuf,
    pub level: f64,
}

impl Default for FwhmConfig {
    fn default() -> Self {
        FwhmConfig {
            input: PathBuf::from("summary.csv"),
            level: 0.75,
        }
    }
}

/// Interval around the peak on which a curve stays at or above `level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Width {
    pub lo: f64,
    pub hi: f64,
    /// The curve had not dropped below `level` at a grid edge.
    pub truncated: bool,
}

/// `points` must be sorted by abscissa. Returns `None` when the curve never
/// reaches `level`. Crossings are linearly interpolated.
pub fn fwhm_widths(points: &[(f64, f64)], level: f64) -> Option<Width> {
    let peak = points
        .iter()
        .enumerate()
        .fold(None, |best: Option<usize>, (i, p)| match best {
            Some(b) if points[b].1 >= p.1 => Some(b),
            _ => Some(i),
        })?;
    if points[peak].1 < level {
        return None;
    }
    let cross = |a: (f64, f64), b: (f64, f64)| a.0 + (level - a.1) / (b.1 - a.1) * (b.0 - a.0);
    let mut truncated = false;
    let mut i = peak;
    while i > 0 && points[i - 1].1 >= level {
        i -= 1;
    }
    let lo = if i == 0 {
        truncated = true;
        points[0].0
    } else {
        cross(points[i - 1], points[i])
    };
    let mut j = peak;
    while j + 1 < points.len() && points[j + 1].1 >= level {
        j += 1;
    }
    let hi = if j + 1 == points.len() {
        truncated = true;
        points[j].0
    } else {
        cross(points[j + 1], points[j])
    };
    Some(Width { lo, hi, truncated })
}

pub(super) fn run(cfg: &FwhmConfig, out: &Path) -> Result<RunReport> {
    if !(cfg.level > 0.0 && cfg.level <= 1.0) {
        return Err(Error::config("level must lie in (0, 1]"));
    }
    let summary = Table::read(&cfg.input, 4)?;
    for c in ["xi_num", "xi_den", "eta_num", "eta_den", "rel_fh"] {
        if summary.column(c).is_none() {
            return Err(Error::config(format!("{} lacks column '{c}'", cfg.input.display())));
        }
    }
    let mut order = Vec::new();
    let mut curves: HashMap<(String, String), Vec<(f64, f64)>> = HashMap::new();
    for row in &summary.rows {
        let key = (
            summary.get(row, "xi_num").unwrap_or_default().to_string(),
            summary.get(row, "xi_den").unwrap_or_default().to_string(),
        );
        let eta = summary.num(row, "eta_num").zip(summary.num(row, "eta_den")).map(|(n, d)| n / d);
        let curve = curves.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        if let (Some(eta), Some(v)) = (eta, summary.num(row, "rel_fh")) {
            curve.push((eta, v));
        }
    }
    let mut table = Table::new(&["xi_num", "xi_den", "eta_lo", "eta_hi", "width", "truncated", "empty"], 2);
    for key in &order {
        let mut curve = curves[key].clone();
        curve.sort_by(|a, b| a.0.total_cmp(&b.0));
        let w = fwhm_widths(&curve, cfg.level);
        if w.is_none() {
            log::warn!("xi {}/{}: performance never reaches {}", key.0, key.1, cfg.level);
        }
        table.rows.push(vec![
            key.0.clone(),
            key.1.clone(),
            fmt_opt(w.map(|w| w.lo)),
            fmt_opt(w.map(|w| w.hi)),
            fmt_opt(w.map(|w| w.hi - w.lo)),
            w.is_some_and(|w| w.truncated).to_string(),
            w.is_none().to_string(),
        ]);
    }
    table.write(&out.join("widths.csv"))?;
    Ok(RunReport {
        files: vec!["widths.csv".into()],
        ..RunReport::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_peak_width_is_exact() {
        // peak 1 at x = 2, base from 0 to 4: width at level l is 4 (1 - l)
        let pts: Vec<(f64, f64)> = (0..=8).map(|k| {
            let x = k as f64 * 0.5;
            (x, 1.0 - (x - 2.0).abs() / 2.0)
        }).collect();
        let w = fwhm_widths(&pts, 0.75).unwrap();
        assert!((w.lo - 1.5).abs() < 1e-12 && (w.hi - 2.5).abs() < 1e-12 && !w.truncated);
        let w = fwhm_widths(&pts, 0.6).unwrap();
        assert!((w.hi - w.lo - 1.6).abs() < 1e-12);
    }

    #[test]
    fn full_level_collapses_to_argmax() {
        let pts = [(1.0, 0.2), (2.0, 1.0), (3.0, 0.5)];
        let w = fwhm_widths(&pts, 1.0).unwrap();
        assert_eq!((w.lo, w.hi), (2.0, 2.0));
    }

    #[test]
    fn unreachable_level_and_edges() {
        assert!(fwhm_widths(&[(1.0, 0.5), (2.0, 0.6)], 0.75).is_none());
        assert!(fwhm_widths(&[], 0.5).is_none());
        let w = fwhm_widths(&[(1.0, 1.0), (2.0, 0.9), (3.0, 0.1)], 0.5).unwrap();
        assert!(w.truncated && w.lo == 1.0 && (w.hi - 2.5).abs() < 1e-12);
    }
}
