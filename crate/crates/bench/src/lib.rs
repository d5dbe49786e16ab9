//! Shared inputs for the benchmarks.

use fracrc::dynamics::simulate;
use fracrc::{IntegratorConfig, SystemSpec, Trajectory};

/// Post-transient Lorenz trajectory with `n` rows at dt = 0.01.
pub fn lorenz(n: usize) -> Trajectory {
    let spec = SystemSpec::lorenz();
    simulate(&spec, spec.default_initial_condition(7), 5000, n, &IntegratorConfig::default()).expect("lorenz integrates")
}
