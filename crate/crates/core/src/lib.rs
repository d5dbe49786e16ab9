//! Reservoir computing with tunable fractional nonlinearities.
//!
//! The crate bundles chaotic data generators whose nonlinear exponents can be
//! dialled continuously, a fully deterministic minimal reservoir computer
//! whose readout sees `|r|^η` for a single rational `η`, a classical
//! echo-state network with an optional fractional readout library, climate
//! metrics (forecast horizon, largest Lyapunov exponent, correlation
//! dimension), Fourier phase-randomized surrogates and a probe that estimates
//! the smallest nonlinearity present in a time series.

pub mod classic_rc;
pub mod dynamics;
mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod minimal_rc;
pub mod probe;
pub mod readout;
pub mod rng;
pub mod surrogates;

pub use dynamics::{frac_pow, FracExponent, IntegratorConfig, SystemSpec, Trajectory};
pub use error::{Error, Result};
