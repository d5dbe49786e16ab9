use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fracrc::dynamics::integrate;
use fracrc::metrics::{correlation_sum, log_radii, lyapunov_rosenstein, LyapunovConfig};
use fracrc::surrogates::trajectory_surrogate;
use fracrc::{FracExponent, IntegratorConfig, SystemSpec};
use fracrc_bench::lorenz;

fn frac_pow(c: &mut Criterion) {
    let xs: Vec<f64> = (0..1024).map(|i| (i as f64 - 512.0) * 0.037).collect();
    let mut group = c.benchmark_group("frac_pow");
    for (n, d) in [(2, 1), (132, 50), (279, 50)] {
        let e = FracExponent::new(n, d).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}/{d}")), &e, |b, &e| {
            b.iter(|| xs.iter().map(|&x| e.apply(black_box(x))).sum::<f64>())
        });
    }
    group.finish();
}

fn integrator(c: &mut Criterion) {
    let spec = SystemSpec::lorenz();
    let cfg = IntegratorConfig::default();
    c.bench_function("dopri5/lorenz_10k", |b| b.iter(|| integrate(&spec, black_box([1.0, 2.0, 20.0]), 10_000, &cfg).unwrap()));
}

fn correlation(c: &mut Criterion) {
    let traj = lorenz(20_000);
    let radii = log_radii(0.05, 5.0, 24);
    let mut group = c.benchmark_group("correlation_sum");
    group.sample_size(10);
    for n in [5_000, 20_000] {
        let pts = &traj.as_slice()[..n * 3];
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| correlation_sum(pts, 3, &radii)));
    }
    group.finish();
}

fn lyapunov(c: &mut Criterion) {
    let traj = lorenz(10_000);
    let mut group = c.benchmark_group("rosenstein");
    group.sample_size(10);
    group.bench_function("lorenz_10k", |b| b.iter(|| lyapunov_rosenstein(&traj, &LyapunovConfig::default()).unwrap()));
    group.finish();
}

fn surrogate(c: &mut Criterion) {
    let traj = lorenz(11_100);
    c.bench_function("ft_surrogate/lorenz_11100", |b| b.iter(|| trajectory_surrogate(&traj, black_box(3)).unwrap()));
}

criterion_group!(benches, frac_pow, integrator, correlation, lyapunov, surrogate);
criterion_main!(benches);
