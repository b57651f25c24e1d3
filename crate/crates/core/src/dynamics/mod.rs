//! Mean-field atom-cavity dynamics: the equations of motion for the
//! condensate components and the cavity modes, adiabatic mode amplitudes,
//! an adaptive Runge-Kutta integrator for pump ramps and onset detection.

mod integrate;
mod model;

pub use integrate::{detect_onset, integrate, IntegratorOptions, Onset, RampProtocol, Trajectory, DEFAULT_SEED};
pub use model::{
    adiabatic_mode_amplitudes, eom_rhs, truncation_change, DynamicsModel, MeanFieldState, PERTURBATION_LIMIT,
};
