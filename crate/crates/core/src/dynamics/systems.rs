use serde::{Deserialize, Serialize};

use super::exponent::FracExponent;
use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng};
use rand::Rng;

/// The chaotic flows used as data generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "system", rename_all = "snake_case")]
pub enum SystemSpec {
    Lorenz {
        sigma: f64,
        rho: f64,
        beta: f64,
    },
    /// Halvorsen flow with per-equation exponents on the nonlinear terms.
    FractionalHalvorsen { a: f64, xi: [FracExponent; 3] },
    Thomas { b: f64 },
}

impl SystemSpec {
    /// σ = 10, ρ = 28, β = 8/3.
    pub fn lorenz() -> Self {
        SystemSpec::Lorenz {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }

    pub fn halvorsen(a: f64, xi: [FracExponent; 3]) -> Self {
        SystemSpec::FractionalHalvorsen { a, xi }
    }

    /// All three exponents equal.
    pub fn halvorsen_uniform(a: f64, xi: FracExponent) -> Self {
        SystemSpec::FractionalHalvorsen { a, xi: [xi; 3] }
    }

    /// The canonical quadratic Halvorsen flow, a = 1.3.
    pub fn halvorsen_classic() -> Self {
        Self::halvorsen_uniform(1.3, FracExponent::integer(2).expect("2 is even"))
    }

    pub fn thomas() -> Self {
        SystemSpec::Thomas { b: 0.21 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemSpec::Lorenz { .. } => "lorenz",
            SystemSpec::FractionalHalvorsen { .. } => "halvorsen",
            SystemSpec::Thomas { .. } => "thomas",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let params: Vec<f64> = match *self {
            SystemSpec::Lorenz { sigma, rho, beta } => vec![sigma, rho, beta],
            SystemSpec::FractionalHalvorsen { a, xi } => {
                if xi.iter().any(|e| e.value() < 1.0) {
                    return Err(Error::config("Halvorsen exponents must be at least 1"));
                }
                vec![a]
            }
            SystemSpec::Thomas { b } => vec![b],
        };
        if params.iter().all(|p| p.is_finite()) {
            Ok(())
        } else {
            Err(Error::config(format!("non-finite parameter in {self:?}")))
        }
    }

    /// Time derivative at `x`.
    #[inline]
    pub fn rhs(&self, x: &[f64; 3]) -> [f64; 3] {
        let [x1, x2, x3] = *x;
        match *self {
            SystemSpec::Lorenz { sigma, rho, beta } => [
                sigma * (x2 - x1),
                rho * x1 - x2 - x1 * x3,
                -beta * x3 + x1 * x2,
            ],
            SystemSpec::FractionalHalvorsen { a, xi } => [
                -a * x1 - 4.0 * x2 - 4.0 * x3 - xi[0].apply(x2),
                -a * x2 - 4.0 * x3 - 4.0 * x1 - xi[1].apply(x3),
                -a * x3 - 4.0 * x1 - 4.0 * x2 - xi[2].apply(x1),
            ],
            SystemSpec::Thomas { b } => [
                -b * x1 + x2.sin(),
                -b * x2 + x3.sin(),
                -b * x3 + x1.sin(),
            ],
        }
    }

    /// Lorenz: each coordinate uniform on [-20, 20] from `seed`.
    /// Halvorsen and Thomas: the fixed point (0.1, 0, 0).
    pub fn default_initial_condition(&self, seed: u64) -> [f64; 3] {
        match self {
            SystemSpec::Lorenz { .. } => {
                let mut rng = stream_rng(seed, stream::INITIAL_CONDITION);
                std::array::from_fn(|_| rng.random_range(-20.0..=20.0))
            }
            SystemSpec::FractionalHalvorsen { .. } | SystemSpec::Thomas { .. } => [0.1, 0.0, 0.0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorenz_hand_value() {
        let d = SystemSpec::lorenz().rhs(&[1.0, 1.0, 1.0]);
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 26.0);
        assert!((d[2] - (-5.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn origin_is_fixed_for_halvorsen_and_thomas() {
        for n in [52, 100, 132, 280] {
            let xi = FracExponent::with_default_denominator(n).unwrap();
            assert_eq!(SystemSpec::halvorsen_uniform(1.3, xi).rhs(&[0.0; 3]), [0.0; 3]);
        }
        assert_eq!(SystemSpec::thomas().rhs(&[0.0; 3]), [0.0; 3]);
    }

    #[test]
    fn halvorsen_nonlinearity_has_leading_minus() {
        let spec = SystemSpec::halvorsen_classic();
        // only x2 set: the first equation picks up -4 x2 - x2^2
        let d = spec.rhs(&[0.0, -2.0, 0.0]);
        assert_eq!(d[0], 8.0 - 4.0);
        assert_eq!(d[1], 2.6);
        assert_eq!(d[2], 8.0);
    }

    #[test]
    fn initial_conditions() {
        let h = SystemSpec::halvorsen_classic();
        assert_eq!(h.default_initial_condition(1), [0.1, 0.0, 0.0]);
        assert_eq!(h.default_initial_condition(99), [0.1, 0.0, 0.0]);
        let l = SystemSpec::lorenz();
        assert_eq!(l.default_initial_condition(5), l.default_initial_condition(5));
        assert_ne!(l.default_initial_condition(5), l.default_initial_condition(6));
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for seed in 0..10_000 {
            for c in l.default_initial_condition(seed) {
                lo = lo.min(c);
                hi = hi.max(c);
            }
        }
        assert!(lo >= -20.0 && hi <= 20.0);
        assert!(lo < -19.9 && hi > 19.9);
    }

    #[test]
    fn validation() {
        let xi = FracExponent::new(2, 4).unwrap();
        assert!(SystemSpec::halvorsen_uniform(1.3, xi).validate().is_err());
        assert!(SystemSpec::Thomas { b: f64::NAN }.validate().is_err());
        assert!(SystemSpec::lorenz().validate().is_ok());
    }

    #[test]
    fn serde_tagging() {
        let json = serde_json::to_value(SystemSpec::thomas()).unwrap();
        assert_eq!(json["system"], "thomas");
        let back: SystemSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, SystemSpec::thomas());
    }
}
