//! Chaotic data generators: Lorenz, fractional Halvorsen and Thomas flows.

mod exponent;
mod integrator;
mod systems;
mod trajectory;

pub use exponent::{exponent_grid, frac_pow, FracExponent, DEFAULT_DENOMINATOR};
pub use integrator::{integrate, simulate, IntegratorConfig};
pub use systems::SystemSpec;
pub use trajectory::Trajectory;
pub(crate) use trajectory::format_f64;
