//! Unit conventions.
//!
//! Frequencies are stored as angular frequencies in rad/us (so a cyclic
//! frequency in MHz maps to `2*pi*nu`), lengths in um and times in us.
//! Configuration files use cyclic MHz; convert at the boundary.

use std::f64::consts::PI;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const AMU: f64 = 1.660_539_066_60e-27;
pub const BOHR_RADIUS_UM: f64 = 5.291_772_109_03e-5;
pub const RB87_MASS: f64 = 86.909_180_527 * AMU;

/// Cyclic MHz to angular rad/us.
pub fn mhz(nu: f64) -> f64 {
    2.0 * PI * nu
}

/// Angular rad/us to cyclic MHz.
pub fn to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

/// Cyclic kHz to angular rad/us.
pub fn khz(nu: f64) -> f64 {
    2.0 * PI * nu * 1e-3
}

/// Cyclic Hz to angular rad/us.
pub fn hz(nu: f64) -> f64 {
    2.0 * PI * nu * 1e-6
}
