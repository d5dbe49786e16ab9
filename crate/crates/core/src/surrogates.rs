//! Fourier phase-randomized surrogates.
//!
//! A surrogate keeps the amplitude spectrum of a series and draws new
//! phases, so any statistic that depends only on linear (second-order)
//! structure is preserved while nonlinear structure is destroyed.

use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::Trajectory;

/// Surrogate before the final cast to real values. The imaginary parts are
/// round-off residue.
pub fn ft_surrogate_complex(series: &[f64], seed: u64) -> Result<Vec<Complex<f64>>> {
    let n = series.len();
    if n < 4 {
        return Err(Error::InsufficientData(format!(
            "surrogates need at least 4 samples, got {n}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("surrogate input".into()));
    }
    let mut planner = FftPlanner::new();
    let mut spec: Vec<Complex<f64>> = series.iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut spec);

    let mut rng = stream_rng(seed, stream::SURROGATE);
    for k in 1..n.div_ceil(2) {
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let z = Complex::from_polar(spec[k].norm(), phase);
        spec[k] = z;
        spec[n - k] = z.conj();
    }
    planner.plan_fft_inverse(n).process(&mut spec);
    let scale = 1.0 / n as f64;
    for z in &mut spec {
        *z *= scale;
    }
    Ok(spec)
}

/// Phase-randomized surrogate of a scalar series.
pub fn ft_surrogate(series: &[f64], seed: u64) -> Result<Vec<f64>> {
    Ok(ft_surrogate_complex(series, seed)?.into_iter().map(|z| z.re).collect())
}

/// Surrogate of every coordinate, each with independently drawn phases.
pub fn trajectory_surrogate(traj: &Trajectory, seed: u64) -> Result<Trajectory> {
    let d = traj.dim();
    let columns = (0..d)
        .map(|j| ft_surrogate(&traj.column(j), derive_seed(seed, j as u64)))
        .collect::<Result<Vec<_>>>()?;
    let data = (0..traj.len())
        .flat_map(|t| columns.iter().map(move |c| c[t]))
        .collect();
    Trajectory::new(data, d, traj.dt())
}

/// `M` seeded surrogates of one trajectory.
#[derive(Debug, Clone)]
pub struct SurrogateEnsemble {
    originals: Trajectory,
    realizations: usize,
    seed: u64,
}

impl SurrogateEnsemble {
    pub fn new(originals: Trajectory, realizations: usize, seed: u64) -> Result<Self> {
        if realizations == 0 {
            return Err(Error::config("a surrogate ensemble needs at least one realization"));
        }
        Ok(SurrogateEnsemble {
            originals,
            realizations,
            seed,
        })
    }

    pub fn originals(&self) -> &Trajectory {
        &self.originals
    }

    pub fn realizations(&self) -> usize {
        self.realizations
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn member(&self, k: usize) -> Result<Trajectory> {
        trajectory_surrogate(&self.originals, derive_seed(self.seed, k as u64))
    }
}

/// A measure evaluated across a surrogate ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateBackground {
    pub mean: f64,
    /// Sample standard deviation over successful realizations.
    pub std: f64,
    /// Per-realization values; `None` where the measure failed.
    pub values: Vec<Option<f64>>,
}

impl SurrogateBackground {
    pub fn failures(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// True when `value` lies farther than `k` standard deviations from the mean.
    pub fn is_outside(&self, value: f64, k: f64) -> bool {
        (value - self.mean).abs() > k * self.std
    }
}

/// Applies `measure` to `realizations` surrogates of `traj`. Failed
/// realizations are excluded; more than half failing is an error.
pub fn surrogate_background<F>(traj: &Trajectory, realizations: usize, seed: u64, measure: F) -> Result<SurrogateBackground>
where
    F: Fn(&Trajectory) -> Result<f64> + Sync,
{
    if realizations < 2 {
        return Err(Error::config("a surrogate background needs at least two realizations"));
    }
    let ensemble = SurrogateEnsemble::new(traj.clone(), realizations, seed)?;
    let values: Vec<Option<f64>> = (0..realizations)
        .into_par_iter()
        .map(|k| {
            let sample = ensemble.member(k)?;
            measure(&sample)
        })
        .map(|r| match r {
            Ok(v) if v.is_finite() => Some(v),
            Ok(_) => None,
            Err(e) => {
                log::debug!("surrogate realization failed: {e}");
                None
            }
        })
        .collect();
    let ok: Vec<f64> = values.iter().flatten().copied().collect();
    let failed = realizations - ok.len();
    if failed * 2 > realizations || ok.is_empty() {
        return Err(Error::TooManyFailures {
            failed,
            total: realizations,
        });
    }
    let mean = ok.iter().sum::<f64>() / ok.len() as f64;
    let std = if ok.len() > 1 {
        (ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (ok.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(SurrogateBackground { mean, std, values })
}

/// Normalized third moment of lagged increments. Zero in expectation for
/// time-reversible (in particular linear Gaussian) processes.
pub fn time_reversal_asymmetry(series: &[f64], lag: usize) -> f64 {
    let inc: Vec<f64> = series.windows(lag + 1).map(|w| w[lag] - w[0]).collect();
    let n = inc.len() as f64;
    let m2 = inc.iter().map(|d| d * d).sum::<f64>() / n;
    let m3 = inc.iter().map(|d| d * d * d).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn spectrum(x: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(x.len()).process(&mut buf);
        buf
    }

    fn ar1(n: usize, phi: f64, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        let mut x = 0.0;
        (0..n)
            .map(|_| {
                let e: f64 = rng.random_range(-1.0..1.0);
                x = phi * x + e;
                x + 2.0
            })
            .collect()
    }

    fn variance(x: &[f64]) -> f64 {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
    }

    #[test]
    fn seed_determines_surrogate() {
        let x = ar1(257, 0.7, 1);
        assert_eq!(ft_surrogate(&x, 9).unwrap(), ft_surrogate(&x, 9).unwrap());
        assert_ne!(ft_surrogate(&x, 9).unwrap(), ft_surrogate(&x, 10).unwrap());
    }

    #[test]
    fn autocorrelation_is_preserved() {
        let x = ar1(8192, 0.8, 2);
        let s = ft_surrogate(&x, 3).unwrap();
        let acf = |v: &[f64], lag: usize| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let var = variance(v);
            let n = v.len();
            (0..n).map(|t| (v[t] - m) * (v[(t + lag) % n] - m)).sum::<f64>() / (n as f64 * var)
        };
        let tol = 3.0 / (x.len() as f64).sqrt();
        for lag in 0..=20 {
            assert!((acf(&x, lag) - acf(&s, lag)).abs() < tol, "lag {lag}");
        }
    }

    #[test]
    fn short_or_non_finite_input_is_rejected() {
        assert!(ft_surrogate(&[1.0, 2.0, 3.0], 0).is_err());
        assert!(ft_surrogate(&[1.0, f64::NAN, 3.0, 4.0], 0).is_err());
    }

    #[test]
    fn background_of_mean_and_variance() {
        let x = ar1(1000, 0.5, 4);
        let traj = Trajectory::from_series(x.clone(), 1.0).unwrap();
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let bg = surrogate_background(&traj, 8, 5, |t| Ok(t.mean()[0])).unwrap();
        assert!((bg.mean - m).abs() < 1e-10 && bg.std < 1e-10);
        let bg = surrogate_background(&traj, 8, 5, |t| Ok(variance(&t.column(0)))).unwrap();
        assert!((bg.mean - variance(&x)).abs() < 1e-6 * variance(&x));
    }

    #[test]
    fn failures_are_excluded_until_half() {
        let traj = Trajectory::from_series(ar1(64, 0.5, 6), 1.0).unwrap();
        let flaky = |t: &Trajectory| {
            if t.row(0)[0] > 2.0 {
                Err(Error::Degenerate("flaky".into()))
            } else {
                Ok(1.0)
            }
        };
        match surrogate_background(&traj, 20, 7, flaky) {
            Ok(bg) => assert!(bg.failures() <= 10 && bg.mean == 1.0),
            Err(Error::TooManyFailures { failed, total }) => assert!(failed > 10 && total == 20),
            Err(e) => panic!("{e}"),
        }
        let all_fail = surrogate_background(&traj, 4, 7, |_| Err(Error::Degenerate("no".into())));
        assert!(matches!(all_fail, Err(Error::TooManyFailures { failed: 4, total: 4 })));
    }

    #[test]
    fn coordinates_get_independent_phases() {
        let x = ar1(500, 0.6, 8);
        let rows: Vec<[f64; 2]> = x.iter().map(|&v| [v, v]).collect();
        let s = trajectory_surrogate(&Trajectory::from_rows(&rows, 1.0).unwrap(), 1).unwrap();
        assert_ne!(s.column(0), s.column(1));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn amplitudes_power_and_realness(
            x in proptest::collection::vec(-100.0f64..100.0, 4..300),
            seed in any::<u64>(),
        ) {
            let raw = ft_surrogate_complex(&x, seed).unwrap();
            let peak = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let imag = raw.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
            prop_assert!(imag <= 1e-10 * peak.max(1e-300));

            let s: Vec<f64> = raw.iter().map(|z| z.re).collect();
            let (a, b) = (spectrum(&x), spectrum(&s));
            let top = a.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p.norm() - q.norm()).abs() <= 1e-10 * top.max(1e-300));
            }
            let px: f64 = x.iter().map(|v| v * v).sum();
            let ps: f64 = s.iter().map(|v| v * v).sum();
            prop_assert!((px - ps).abs() <= 1e-10 * px.max(1e-300));
            let mx = x.iter().sum::<f64>() / x.len() as f64;
            let ms = s.iter().sum::<f64>() / s.len() as f64;
            prop_assert!((mx - ms).abs() <= 1e-10 * peak.max(1e-300));
        }
    }
}
