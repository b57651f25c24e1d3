//! Domain types, mode functions, mode weights and cloud energies.

mod energies;
mod hermite;
mod params;

pub use energies::{cloud_energies, gamma_factor, tf_radius, CloudEnergies, CloudParams, PumpParams};
pub use hermite::{hermite_functions, hermite_gauss, hermite_poly, mode_function};
pub use params::{mode_weight, CavityKind, CavityParams, KernelParams, ModeIndex};
