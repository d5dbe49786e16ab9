use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominator used throughout the experiments.
pub const DEFAULT_DENOMINATOR: u32 = 50;

/// A rational exponent `n/d` with an even numerator.
///
/// The even numerator keeps `x^(n/d)`, read as the real `d`-th root of `x^n`,
/// defined and non-negative for every real `x`. Equality, ordering and
/// hashing are by rational value, so `2/1 == 100/50`.
#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "RawExponent", into = "RawExponent")]
pub struct FracExponent {
    numerator: u32,
    denominator: u32,
}

#[derive(Serialize, Deserialize)]
struct RawExponent {
    numerator: u32,
    denominator: u32,
}

impl TryFrom<RawExponent> for FracExponent {
    type Error = Error;

    fn try_from(raw: RawExponent) -> Result<Self> {
        FracExponent::new(raw.numerator, raw.denominator)
    }
}

impl From<FracExponent> for RawExponent {
    fn from(e: FracExponent) -> Self {
        RawExponent {
            numerator: e.numerator,
            denominator: e.denominator,
        }
    }
}

impl FracExponent {
    pub fn new(numerator: u32, denominator: u32) -> Result<Self> {
        let invalid = |reason| Error::InvalidExponent {
            numerator,
            denominator,
            reason,
        };
        if denominator == 0 {
            return Err(invalid("denominator must be at least 1"));
        }
        if numerator == 0 {
            return Err(invalid("numerator must be positive"));
        }
        if numerator % 2 != 0 {
            return Err(invalid("numerator must be even"));
        }
        Ok(FracExponent {
            numerator,
            denominator,
        })
    }

    /// `numerator / 50`.
    pub fn with_default_denominator(numerator: u32) -> Result<Self> {
        Self::new(numerator, DEFAULT_DENOMINATOR)
    }

    /// The integer `k` written over the default denominator (`50k/50`).
    pub fn integer(k: u32) -> Result<Self> {
        Self::new(k * DEFAULT_DENOMINATOR, DEFAULT_DENOMINATOR)
    }

    pub fn numerator(self) -> u32 {
        self.numerator
    }

    pub fn denominator(self) -> u32 {
        self.denominator
    }

    pub fn value(self) -> f64 {
        f64::from(self.numerator) / f64::from(self.denominator)
    }

    pub fn is_integer(self) -> bool {
        self.numerator % self.denominator == 0
    }

    pub fn is_one(self) -> bool {
        self.numerator == self.denominator
    }

    /// The same value over a different denominator, if representable.
    pub fn rescaled(self, denominator: u32) -> Option<Self> {
        let num = u64::from(self.numerator) * u64::from(denominator);
        if num % u64::from(self.denominator) != 0 {
            return None;
        }
        let n = u32::try_from(num / u64::from(self.denominator)).ok()?;
        Self::new(n, denominator).ok()
    }

    /// `|x|^(n/d)` without validating `x`; NaN propagates.
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        let ax = x.abs();
        if self.is_integer() {
            ax.powi((self.numerator / self.denominator) as i32)
        } else {
            ax.powf(self.value())
        }
    }

    fn reduced(self) -> (u32, u32) {
        let g = gcd(self.numerator, self.denominator);
        (self.numerator / g, self.denominator / g)
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `|x|^(n/d)`: the real `d`-th root of `x^n` for even `n`.
pub fn frac_pow(x: f64, e: FracExponent) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("frac_pow argument {x}")));
    }
    Ok(e.apply(x))
}

impl PartialEq for FracExponent {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for FracExponent {}

impl Ord for FracExponent {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = u64::from(self.numerator) * u64::from(other.denominator);
        let rhs = u64::from(other.numerator) * u64::from(self.denominator);
        lhs.cmp(&rhs)
    }
}

impl PartialOrd for FracExponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for FracExponent {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.reduced().hash(state);
    }
}

impl fmt::Debug for FracExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl fmt::Display for FracExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

impl FromStr for FracExponent {
    type Err = Error;

    /// Accepts `n/d` or a bare `n` (read as `n/50`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("cannot parse exponent {s:?}"));
        match s.split_once('/') {
            Some((n, d)) => {
                let n = n.trim().parse().map_err(|_| bad())?;
                let d = d.trim().parse().map_err(|_| bad())?;
                Self::new(n, d)
            }
            None => Self::with_default_denominator(s.trim().parse().map_err(|_| bad())?),
        }
    }
}

/// Exponents with numerators `from, from + step, ..., to` over `denominator`.
pub fn exponent_grid(from: u32, to: u32, step: u32, denominator: u32) -> Result<Vec<FracExponent>> {
    if step == 0 || from > to {
        return Err(Error::config(format!(
            "empty exponent grid {from}..={to} step {step}"
        )));
    }
    (from..=to)
        .step_by(step as usize)
        .map(|n| FracExponent::new(n, denominator))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(n: u32) -> FracExponent {
        FracExponent::with_default_denominator(n).unwrap()
    }

    #[test]
    fn rejects_odd_and_zero() {
        assert!(FracExponent::new(3, 50).is_err());
        assert!(FracExponent::new(0, 50).is_err());
        assert!(FracExponent::new(2, 0).is_err());
        assert!(FracExponent::new(2, 1).is_ok());
    }

    #[test]
    fn value_equality() {
        assert_eq!(FracExponent::new(2, 1).unwrap(), e(100));
        assert!(e(132) > e(130));
        assert_eq!(e(100).rescaled(1), Some(FracExponent::new(2, 1).unwrap()));
        assert_eq!(e(132).rescaled(1), None);
    }

    #[test]
    fn worked_values() {
        assert_eq!(frac_pow(0.0, e(100)).unwrap(), 0.0);
        assert_eq!(frac_pow(-3.0, e(100)).unwrap(), 9.0);
        // 2^2.64 from a 50-digit evaluation of exp(2.64 ln 2)
        let expected = 6.233_316_637_283_999;
        assert!((frac_pow(2.0, e(132)).unwrap() - expected).abs() < 1e-12 * expected);
        assert!(frac_pow(f64::NAN, e(100)).is_err());
        assert!(frac_pow(f64::INFINITY, e(100)).is_err());
    }

    #[test]
    fn parse_forms() {
        assert_eq!("132/50".parse::<FracExponent>().unwrap(), e(132));
        assert_eq!("132".parse::<FracExponent>().unwrap(), e(132));
        assert!("3/2".parse::<FracExponent>().is_err());
        assert!("x".parse::<FracExponent>().is_err());
    }

    #[test]
    fn serde_form() {
        let json = serde_json::to_string(&e(132)).unwrap();
        assert_eq!(json, r#"{"numerator":132,"denominator":50}"#);
        assert!(serde_json::from_str::<FracExponent>(r#"{"numerator":3,"denominator":50}"#).is_err());
    }

    proptest! {
        #[test]
        fn even_symmetry(x in -1e3f64..1e3, n in 1u32..150, d in 1u32..100) {
            let e = FracExponent::new(2 * n, d).unwrap();
            let p = frac_pow(x, e).unwrap();
            prop_assert!(p >= 0.0);
            prop_assert_eq!(p, frac_pow(-x, e).unwrap());
        }

        #[test]
        fn integer_agreement(x in -20f64..20.0, k in 1u32..6, d in 1u32..80) {
            let e = FracExponent::new(2 * k * d, d).unwrap();
            let exact = x.abs().powi(2 * k as i32);
            let got = frac_pow(x, e).unwrap();
            prop_assert!((got - exact).abs() <= 1e-12 * exact.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn monotone_in_magnitude(a in 0f64..100.0, b in 0f64..100.0, n in 1u32..150) {
            prop_assume!(a < b);
            let e = FracExponent::with_default_denominator(2 * n).unwrap();
            prop_assert!(frac_pow(a, e).unwrap() < frac_pow(-b, e).unwrap());
        }
    }
}
