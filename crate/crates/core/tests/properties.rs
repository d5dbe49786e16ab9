use fracrc::linalg::ridge_solve;
use fracrc::metrics::kdtree::dist2;
use fracrc::metrics::{correlation_sum, log_radii};
use fracrc::minimal_rc::{MinRc, MinRcConfig, ReservoirState};
use fracrc::readout::ReservoirModel;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn brute_counts(points: &[f64], dim: usize, radii: &[f64]) -> Vec<u64> {
    let n = points.len() / dim;
    radii
        .iter()
        .map(|r| {
            let r2 = r * r;
            let mut c = 0;
            for i in 0..n {
                for j in 0..n {
                    if i != j && dist2(&points[i * dim..(i + 1) * dim], &points[j * dim..(j + 1) * dim]) < r2 {
                        c += 1;
                    }
                }
            }
            c
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_counts_match_brute_force(
        dim in 1usize..4,
        raw in prop::collection::vec(-5.0f64..5.0, 3..600),
        lo in 0.01f64..0.5,
    ) {
        let n = raw.len() / dim;
        let points = &raw[..n * dim];
        let radii = log_radii(lo, 8.0, 12);
        prop_assert_eq!(correlation_sum(points, dim, &radii), brute_counts(points, dim, &radii));
    }

    #[test]
    fn tree_counts_on_a_lattice(side in 2usize..12, step in 0.1f64..2.0) {
        // many exactly tied distances
        let points: Vec<f64> = (0..side * side).flat_map(|k| [(k % side) as f64 * step, (k / side) as f64 * step]).collect();
        let radii: Vec<f64> = (1..6).map(|k| k as f64 * step).collect();
        prop_assert_eq!(correlation_sum(&points, 2, &radii), brute_counts(&points, 2, &radii));
    }

    #[test]
    fn ridge_satisfies_normal_equations(
        features in 1usize..12,
        outputs in 1usize..4,
        samples in 20usize..80,
        seed in any::<u64>(),
        log_beta in -10.0f64..2.0,
    ) {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let r = DMatrix::from_fn(features, samples, |_, _| next());
        let x = DMatrix::from_fn(outputs, samples, |_, _| next());
        let beta = 10f64.powf(log_beta);
        let g = &r * r.transpose();
        let c = &r * x.transpose();
        let w = ridge_solve(&g, &c, beta).unwrap();
        let resid = (&w * (&g + DMatrix::identity(features, features) * beta) - c.transpose()).abs().max();
        prop_assert!(resid <= 1e-8 * c.abs().max().max(1.0), "residual {}", resid);
    }

    #[test]
    fn block_step_matches_dense(
        d in 1usize..5,
        b in 2usize..6,
        rho in 0.0f64..1.5,
        state in prop::collection::vec(-3.0f64..3.0, 15 * 5),
        input in prop::collection::vec(-20.0f64..20.0, 4),
    ) {
        let m = MinRc::build(MinRcConfig { input_dim: d, block_size: b, spectral_radius: rho, ridge: 1e-6, exponents: vec![] }).unwrap();
        let r0 = state[..m.state_dim()].to_vec();
        let x = &input[..d];
        let fast = m.step(&ReservoirState(r0.clone()), x);
        let dense = m.reservoir().to_dense() * DVector::from_vec(r0) + m.input_matrix().to_dense() * DVector::from_row_slice(x);
        for (p, q) in fast.0.iter().zip(dense.iter()) {
            prop_assert!((p - q).abs() <= 1e-14 * q.abs().max(1.0), "{} vs {}", p, q);
        }
    }
}
