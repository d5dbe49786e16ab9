//! Dense linear-algebra helpers shared by both reservoir families.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Solves `W (G + βI) = Cᵀ` for `W`, where `G = R Rᵀ` (features × features)
/// and `C = R Xᵀ` (features × outputs). Returns `W` (outputs × features).
///
/// The system is symmetrically equilibrated by its diagonal before a
/// Cholesky factorization; an SVD least-squares solve is the fallback when the
/// factorization breaks down.
pub fn ridge_solve(gram: &DMatrix<f64>, cross: &DMatrix<f64>, beta: f64) -> Result<DMatrix<f64>> {
    let n = gram.nrows();
    if gram.ncols() != n || cross.nrows() != n {
        return Err(Error::Solve(format!(
            "shape mismatch: gram {}x{}, cross {}x{}",
            gram.nrows(),
            gram.ncols(),
            cross.nrows(),
            cross.ncols()
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::config(format!("ridge parameter must be positive, got {beta}")));
    }
    let scale: Vec<f64> = (0..n).map(|i| 1.0 / (gram[(i, i)] + beta).sqrt()).collect();
    let mut m = gram.clone();
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] *= scale[i] * scale[j];
        }
        m[(j, j)] += beta * scale[j] * scale[j];
    }
    let mut rhs = cross.clone();
    for (i, s) in scale.iter().enumerate() {
        rhs.row_mut(i).scale_mut(*s);
    }

    let z = match m.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            log::warn!("ridge system not positive definite after equilibration; using SVD");
            m.svd(true, true)
                .solve(&rhs, 1e-14)
                .map_err(|e| Error::Solve(e.to_string()))?
        }
    };
    let mut wt = z;
    for (i, s) in scale.iter().enumerate() {
        wt.row_mut(i).scale_mut(*s);
    }
    if wt.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solve("non-finite readout".into()));
    }
    Ok(wt.transpose())
}

/// Spectral radius from the growth of `‖A^(2^k)‖^(1/2^k)` under repeated,
/// normalized squaring. Unlike vector power iteration this converges when the
/// dominant eigenvalues form a complex pair or a near-degenerate ring.
///
/// Returns 0 for nilpotent matrices.
pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    const MAX_SQUARINGS: u32 = 60;
    const REL_TOL: f64 = 1e-12;
    if a.nrows() != a.ncols() {
        return Err(Error::SpectralRadius("matrix is not square".into()));
    }
    let norm0 = a.norm();
    if norm0 == 0.0 {
        return Ok(0.0);
    }
    // log ‖A^(2^k)‖ is tracked separately from the unit-norm direction.
    let mut log_norm = norm0.ln();
    let mut m = a / norm0;
    let mut prev = f64::NAN;
    for k in 1..=MAX_SQUARINGS {
        let sq = &m * &m;
        let n = sq.norm();
        if n == 0.0 || !n.is_finite() {
            if n == 0.0 {
                return Ok(0.0);
            }
            return Err(Error::SpectralRadius("overflow while squaring".into()));
        }
        log_norm = 2.0 * log_norm + n.ln();
        m = sq / n;
        let est = (log_norm / 2f64.powi(k as i32)).exp();
        // Exponent underflow of the estimate means a (numerically) nilpotent matrix.
        if est < 1e-300 {
            return Ok(0.0);
        }
        if k > 4 && (est - prev).abs() <= REL_TOL * est {
            return Ok(est);
        }
        prev = est;
    }
    if prev.is_finite() {
        Ok(prev)
    } else {
        Err(Error::SpectralRadius("estimate did not converge".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ridge_matches_normal_equations() {
        let r = DMatrix::from_fn(5, 40, |i, j| ((i * 7 + j * 3) as f64 * 0.37).sin());
        let x = DMatrix::from_fn(2, 40, |i, j| ((i + 2 * j) as f64 * 0.11).cos());
        let g = &r * r.transpose();
        let c = &r * x.transpose();
        let beta = 1e-3;
        let w = ridge_solve(&g, &c, beta).unwrap();
        let lhs = &w * (&g + DMatrix::identity(5, 5) * beta);
        let resid = (&lhs - c.transpose()).abs().max();
        assert!(resid < 1e-10 * c.abs().max());
    }

    #[test]
    fn ridge_limit() {
        let r = DMatrix::from_fn(3, 20, |i, j| (i + j) as f64);
        let x = DMatrix::from_fn(1, 20, |_, j| j as f64);
        let w = ridge_solve(&(&r * r.transpose()), &(&r * x.transpose()), 1e12).unwrap();
        assert!(w.norm() < 1e-6);
    }

    #[test]
    fn radius_of_rotation_pair() {
        // eigenvalues ±0.5i: plain vector power iteration never settles here
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -0.5, 0.5, 0.0]);
        assert!((spectral_radius(&a).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn radius_of_nilpotent() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(spectral_radius(&a).unwrap(), 0.0);
        assert_eq!(spectral_radius(&DMatrix::zeros(4, 4)).unwrap(), 0.0);
    }

    #[test]
    fn radius_of_all_ones() {
        let a = DMatrix::from_element(6, 6, 1.0);
        assert!((spectral_radius(&a).unwrap() - 6.0).abs() < 1e-10);
    }
}
