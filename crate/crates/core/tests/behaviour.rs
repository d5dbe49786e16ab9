use std::path::Path;

use fracrc::dynamics::simulate;
use fracrc::harness::{self, EtaGrid, EtaSweepConfig, ExperimentConfig, ExponentSweepConfig, LyapGridConfig, Recipe, RunOptions, Table};
use fracrc::metrics::{climate_check, correlation_dimension, lyapunov_rosenstein, ClimateConfig, CorrelationConfig, LyapunovConfig, PeriodEstimate};
use fracrc::minimal_rc::{MinRc, MinRcConfig};
use fracrc::probe::{probe_smallest_nonlinearity, ProbeConfig, Verdict};
use fracrc::{FracExponent, IntegratorConfig, SystemSpec, Trajectory};
use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn lorenz(n: usize, seed: u64) -> Trajectory {
    let sys = SystemSpec::lorenz();
    simulate(&sys, sys.default_initial_condition(seed), 5000, n, &IntegratorConfig::default()).unwrap()
}

fn lyap_cfg() -> LyapunovConfig {
    LyapunovConfig { period: PeriodEstimate::MeanFrequency, ..LyapunovConfig::default() }
}

fn map_rows(traj: &Trajectory, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Trajectory {
    let rows: Vec<Vec<f64>> = traj.rows().map(&mut f).collect();
    Trajectory::from_rows(&rows, traj.dt()).unwrap()
}

fn linear_map() -> Matrix3<f64> {
    // rotation by 0.3 rad in the x-y plane, damped to radius 0.9
    let (s, c) = 0.3f64.sin_cos();
    Matrix3::new(0.9 * c, -0.9 * s, 0.0, 0.9 * s, 0.9 * c, 0.0, 0.0, 0.0, 0.9)
}

fn linear_orbit(n: usize) -> Trajectory {
    let m = linear_map();
    let mut x = Vector3::new(1.0, -0.5, 0.8);
    let mut rows = Vec::new();
    for _ in 0..n {
        rows.push(x.as_slice().to_vec());
        x = m * x;
    }
    Trajectory::from_rows(&rows, 0.01).unwrap()
}

#[test]
fn linear_system_is_reproduced() {
    let m = linear_map();
    let traj = linear_orbit(300);
    let rc = MinRc::build(MinRcConfig { input_dim: 3, block_size: 3, spectral_radius: 0.0, ridge: 1e-12, exponents: vec![] }).unwrap();
    let readout = rc.train(&traj, 10).unwrap();
    let warmup = traj.segment(0..200).unwrap();
    let pred = rc.predict(&readout, &warmup, 50).unwrap();
    assert!(!pred.diverged());
    // the last warm-up row was fed, so the first output is its image
    let mut oracle = Vector3::from_row_slice(warmup.row(199));
    for t in 0..50 {
        oracle = m * oracle;
        for (p, q) in pred.row(t).iter().zip(oracle.iter()) {
            assert!((p - q).abs() < 1e-6, "step {t}: {p} vs {q}");
        }
    }
}

#[test]
fn huge_ridge_zeroes_the_readout() {
    let traj = linear_orbit(300);
    let rc = MinRc::build(MinRcConfig::reduced(3, 3, 1e-3, 1e12, FracExponent::integer(2).unwrap())).unwrap();
    let readout = rc.train(&traj, 100).unwrap();
    assert!(readout.weights().norm() < 1e-6, "{}", readout.weights().norm());
}

#[test]
fn zero_steps_predicts_nothing() {
    let traj = lorenz(500, 3);
    let rc = MinRc::build(MinRcConfig::reduced(3, 3, 1e-3, 1e-6, FracExponent::integer(2).unwrap())).unwrap();
    let readout = rc.train(&traj, 100).unwrap();
    let pred = rc.predict(&readout, &traj, 0).unwrap();
    assert!(pred.is_empty());
    assert!(!pred.diverged());
}

#[test]
fn correlation_dimension_ignores_rotation_and_scale() {
    let traj = lorenz(10_000, 5);
    let cfg = CorrelationConfig::default();
    let base = correlation_dimension(&traj, &cfg).unwrap();
    let r = nalgebra::Rotation3::from_euler_angles(0.4, -1.1, 2.3);
    let rotated = map_rows(&traj, |x| (r * Vector3::from_row_slice(x)).as_slice().to_vec());
    let scaled = map_rows(&traj, |x| x.iter().map(|v| 2.5 * v).collect());
    let dr = correlation_dimension(&rotated, &cfg).unwrap();
    let ds = correlation_dimension(&scaled, &cfg).unwrap();
    assert!((dr - base).abs() < 1e-6, "{dr} vs {base}");
    assert!((ds - base).abs() < 1e-6, "{ds} vs {base}");
}

#[test]
fn lyapunov_is_direction_sensitive() {
    let cfg = LyapunovConfig::default();
    for seed in 1..=3 {
        let traj = lorenz(50_000, seed);
        let forward = lyapunov_rosenstein(&traj, &cfg).unwrap();
        let backward = lyapunov_rosenstein(&traj.reversed(), &cfg).unwrap();
        assert!(forward > backward, "seed {seed}: {forward} vs {backward}");
    }
}

#[test]
fn climate_of_identical_and_noise_predictions() {
    let truth = lorenz(10_000, 4);
    let cfg = ClimateConfig { lyapunov: lyap_cfg(), ..ClimateConfig::default() };
    let same = climate_check(&truth, &truth, &cfg).unwrap();
    assert!(same.success);
    assert_eq!(same.lyapunov_true, same.lyapunov_pred);
    assert_eq!(same.correlation_dim_true, same.correlation_dim_pred);

    let mean = truth.mean();
    let std = truth.std();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = map_rows(&truth, |_| {
        (0..3).map(|j| Normal::new(mean[j], std[j]).unwrap().sample(&mut rng)).collect()
    });
    let report = climate_check(&truth, &noise, &cfg).unwrap();
    assert!(!report.success);
    assert!(report.correlation_dim_pred > report.correlation_dim_true + 0.5, "{report:?}");
}

#[test]
fn linear_series_has_no_detectable_nonlinearity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut x = 0.0;
    let series: Vec<f64> = (0..4000)
        .map(|_| {
            x = 0.8 * x + normal.sample(&mut rng);
            x
        })
        .collect();
    let traj = Trajectory::from_series(series, 1.0).unwrap();
    let mut cfg = ProbeConfig::financial(5);
    cfg.eta_grid = [52, 100, 150, 200, 280].iter().map(|&n| FracExponent::new(n, 50).unwrap()).collect();
    cfg.surrogate_count = 6;
    cfg.predict_len = 2000;
    let report = probe_smallest_nonlinearity(&traj, &cfg).unwrap();
    assert_eq!(report.verdict, Verdict::Failed, "{report:?}");
    assert_eq!(report.mu_recon, None);
}

fn run(recipe: Recipe, out: &Path) -> harness::RunReport {
    harness::run(&ExperimentConfig { recipe, seed: 1 }, out, RunOptions::default()).unwrap()
}

#[test]
fn heavily_damped_halvorsen_regime() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = LyapGridConfig {
        a_values: vec![10.0],
        xi_grid: vec![FracExponent::integer(2).unwrap()],
        steps: 20_000,
        ..LyapGridConfig::default()
    };
    run(Recipe::LyapGrid(cfg), dir.path());
    let table = Table::read(&dir.path().join("lyap_grid.csv"), 3).unwrap();
    assert_eq!(table.rows.len(), 1);
    let row = &table.rows[0];
    assert_eq!(table.get(row, "diverged"), Some("false"));
    assert_eq!(table.get(row, "fixed_point"), Some("true"));
    assert_eq!(table.get(row, "lyapunov"), Some(""));
    assert_eq!(table.get(row, "chaotic"), Some("false"));
}

#[test]
fn single_eta_normalizes_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = EtaSweepConfig {
        xi_grid: vec![FracExponent::new(132, 50).unwrap()],
        eta_grid: EtaGrid::List { etas: vec![FracExponent::new(132, 50).unwrap()] },
        realizations: 2,
        predict_len: 2000,
        lyapunov_len: 20_000,
        ..EtaSweepConfig::default()
    };
    run(Recipe::EtaSweep(cfg), dir.path());
    let summary = Table::read(&dir.path().join("summary.csv"), 4).unwrap();
    assert_eq!(summary.rows.len(), 1);
    assert_eq!(summary.num(&summary.rows[0], "rel_fh"), Some(1.0));
}

#[test]
fn equal_exponents_have_no_relative_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExponentSweepConfig {
        trajectories: 1,
        numerator_min: 132,
        numerator_max: 132,
        eta_grid: EtaGrid::List { etas: vec![FracExponent::new(100, 50).unwrap(), FracExponent::new(132, 50).unwrap()] },
        predict_len: 2000,
        lyapunov_len: 20_000,
        budget_factor: 1,
        ..ExponentSweepConfig::two()
    };
    let report = run(Recipe::TwoExponent(cfg), dir.path());
    assert_eq!(report.shortfall, 0);
    let cells = Table::read(&dir.path().join("cells.csv"), 7).unwrap();
    assert_eq!(cells.rows.len(), 2);
    for row in &cells.rows {
        assert_eq!(cells.get(row, "xi1_num"), Some("132"));
        assert_eq!(cells.get(row, "xi3_num"), Some("132"));
        assert_eq!(cells.get(row, "rel"), Some(""));
    }
}

