//! Adaptive Dormand–Prince 5(4) with the 4th-order continuous extension,
//! sampled on a fixed output grid.

use serde::{Deserialize, Serialize};

use super::systems::SystemSpec;
use super::trajectory::Trajectory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt_sample: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Max-norm beyond which the run is declared diverged.
    pub divergence_bound: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt_sample: 0.01,
            rel_tol: 1e-6,
            abs_tol: 1e-9,
            divergence_bound: 1e6,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if ok(self.dt_sample) && ok(self.rel_tol) && ok(self.abs_tol) && ok(self.divergence_bound) {
            Ok(())
        } else {
            Err(Error::config(format!("invalid integrator settings {self:?}")))
        }
    }
}

// Butcher tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

type V3 = [f64; 3];

#[inline]
fn comb(y: &V3, h: f64, terms: &[(f64, &V3)]) -> V3 {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn max_norm(x: &V3) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Integrates `spec` from `x0` and returns the samples at `k * dt_sample`,
/// `k = 0..n_steps`.
pub fn integrate(spec: &SystemSpec, x0: [f64; 3], n_steps: usize, cfg: &IntegratorConfig) -> Result<Trajectory> {
    spec.validate()?;
    cfg.validate()?;
    if n_steps == 0 {
        return Err(Error::config("n_steps must be at least 1"));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("initial condition {x0:?}")));
    }

    let f = |y: &V3| spec.rhs(y);
    let mut out = Vec::with_capacity(n_steps * 3);
    out.extend_from_slice(&x0);
    let t_end = (n_steps - 1) as f64 * cfg.dt_sample;
    let mut next_k = 1usize;

    let mut t = 0.0;
    let mut y = x0;
    let mut k1 = f(&y);
    let mut h = initial_step(&f, &y, &k1, cfg).min(cfg.dt_sample);

    while next_k < n_steps {
        if t + h > t_end {
            h = (t_end - t).max(h.min(cfg.dt_sample) * 1e-3);
        }
        if h < 1e-12 * t.abs().max(1.0) {
            return Err(Error::Diverged {
                time: t,
                reason: "step size underflow",
            });
        }
        let k2 = f(&comb(&y, h, &[(A21, &k1)]));
        let k3 = f(&comb(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(&comb(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&comb(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(&comb(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = comb(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(&y_new);

        let mut err = 0.0;
        for i in 0..3 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
            err += (e / sk) * (e / sk);
        }
        let err = (err / 3.0).sqrt();

        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            // Shrink and retry; a persistent failure ends in underflow.
            h *= FAC_MIN;
            continue;
        }

        if err <= 1.0 {
            let t_new = t + h;
            // Dense-output coefficients for this step.
            let rc: [V3; 5] = {
                let mut rc = [[0.0; 3]; 5];
                for i in 0..3 {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    rc[0][i] = y[i];
                    rc[1][i] = ydiff;
                    rc[2][i] = bspl;
                    rc[3][i] = ydiff - h * k7[i] - bspl;
                    rc[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                rc
            };
            while next_k < n_steps {
                let ts = next_k as f64 * cfg.dt_sample;
                if ts > t_new && next_k as f64 * cfg.dt_sample - t_new > 1e-12 * t_new.abs().max(1.0) {
                    break;
                }
                let theta = ((ts - t) / h).clamp(0.0, 1.0);
                let th1 = 1.0 - theta;
                for i in 0..3 {
                    out.push(rc[0][i] + theta * (rc[1][i] + th1 * (rc[2][i] + theta * (rc[3][i] + th1 * rc[4][i]))));
                }
                next_k += 1;
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            if max_norm(&y) > cfg.divergence_bound {
                return Err(Error::Diverged {
                    time: t,
                    reason: "state norm exceeded the divergence bound",
                });
            }
            let fac = if err == 0.0 { FAC_MAX } else { (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX) };
            h *= fac;
        } else {
            h *= (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
        }
    }

    let traj = Trajectory::new(out, 3, cfg.dt_sample)?;
    if let Some(pos) = traj.rows().position(|r| r.iter().any(|v| v.abs() > cfg.divergence_bound)) {
        return Err(Error::Diverged {
            time: pos as f64 * cfg.dt_sample,
            reason: "state norm exceeded the divergence bound",
        });
    }
    Ok(traj)
}

/// Hairer's starting step heuristic.
fn initial_step(f: &impl Fn(&V3) -> V3, y: &V3, f0: &V3, cfg: &IntegratorConfig) -> f64 {
    let sk: V3 = std::array::from_fn(|i| cfg.abs_tol + cfg.rel_tol * y[i].abs());
    let rms = |v: &V3| (v.iter().zip(&sk).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / 3.0).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = comb(y, h0, &[(1.0, f0)]);
    let f1 = f(&y1);
    let diff: V3 = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Integrates `transient + n` samples and drops the first `transient`.
pub fn simulate(spec: &SystemSpec, x0: [f64; 3], transient: usize, n: usize, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let full = integrate(spec, x0, transient + n, cfg)?;
    if transient == 0 {
        Ok(full)
    } else {
        full.discard_transient(transient)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::FracExponent;

    /// Classical fixed-step RK4, independent of the adaptive code path.
    fn rk4(spec: &SystemSpec, x0: V3, h: f64, n_out: usize, every: usize) -> Vec<V3> {
        let mut y = x0;
        let mut out = vec![y];
        let add = |y: &V3, k: &V3, s: f64| -> V3 { std::array::from_fn(|i| y[i] + s * k[i]) };
        while out.len() < n_out {
            for _ in 0..every {
                let k1 = spec.rhs(&y);
                let k2 = spec.rhs(&add(&y, &k1, h / 2.0));
                let k3 = spec.rhs(&add(&y, &k2, h / 2.0));
                let k4 = spec.rhs(&add(&y, &k3, h));
                y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
            }
            out.push(y);
        }
        out
    }

    #[test]
    fn single_step_is_initial_condition() {
        let t = integrate(&SystemSpec::lorenz(), [1.0, 2.0, 3.0], 1, &IntegratorConfig::default()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.row(0), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn lorenz_matches_fine_rk4() {
        let spec = SystemSpec::lorenz();
        let traj = integrate(&spec, [1.0, 1.0, 1.0], 10_000, &IntegratorConfig::default()).unwrap();
        assert!(traj.as_slice().iter().all(|v| v.abs() < 100.0));
        let reference = rk4(&spec, [1.0, 1.0, 1.0], 1e-4, 500, 100);
        let dev = reference
            .iter()
            .enumerate()
            .flat_map(|(k, r)| r.iter().zip(traj.row(k)).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        assert!(dev < 1e-3, "max deviation {dev}");
    }

    #[test]
    fn halvorsen_chaotic_region_stays_bounded() {
        let xi = FracExponent::with_default_denominator(264).unwrap();
        let spec = SystemSpec::halvorsen_uniform(3.98, xi);
        let traj = integrate(&spec, [0.1, 0.0, 0.0], 20_000, &IntegratorConfig::default()).unwrap();
        assert_eq!(traj.len(), 20_000);
    }

    #[test]
    fn blow_up_is_reported() {
        // strongly unstable linear growth via a negative damping parameter
        let spec = SystemSpec::Thomas { b: -5.0 };
        let err = integrate(&spec, [0.1, 0.0, 0.0], 10_000, &IntegratorConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }), "{err}");
    }

    #[test]
    fn tolerance_halving_is_consistent() {
        let spec = SystemSpec::lorenz();
        let coarse = IntegratorConfig::default();
        let fine = IntegratorConfig {
            rel_tol: coarse.rel_tol / 2.0,
            abs_tol: coarse.abs_tol / 2.0,
            ..coarse
        };
        let a = integrate(&spec, [1.0, 1.0, 1.0], 100, &coarse).unwrap();
        let b = integrate(&spec, [1.0, 1.0, 1.0], 100, &fine).unwrap();
        let dev = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(dev < coarse.rel_tol * 100.0, "deviation {dev}");
    }

    #[test]
    fn deterministic() {
        let spec = SystemSpec::thomas();
        let cfg = IntegratorConfig::default();
        let a = integrate(&spec, [0.1, 0.0, 0.0], 3000, &cfg).unwrap();
        let b = integrate(&spec, [0.1, 0.0, 0.0], 3000, &cfg).unwrap();
        assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn transient_discard_gives_stationary_statistics() {
        let spec = SystemSpec::lorenz();
        let traj = simulate(&spec, spec.default_initial_condition(3), 10_000, 20_000, &IntegratorConfig::default()).unwrap();
        let first = traj.segment(0..10_000).unwrap().std()[2];
        let second = traj.segment(10_000..20_000).unwrap().std()[2];
        assert!((first - second).abs() / second < 0.1, "{first} vs {second}");
        assert_eq!(traj.transient_discarded(), 10_000);
    }
}
