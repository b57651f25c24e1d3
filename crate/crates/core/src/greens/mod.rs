//! Cavity Green's functions: the Mehler closed form, its symmetrized
//! variants, the mode-weight integral over tau, finite-size kernels and the
//! brute-force mode-sum oracle.

mod kernels;
mod mehler;
mod overlap;

pub use kernels::{
    greens_cloud, greens_cloud_with, greens_dispersive, greens_dispersive_with, greens_point,
    greens_point_nonlocal, mode_sum_oracle,
};
pub use mehler::{
    g_dispersive, g_dispersive_sym, g_prime, g_prime_sym, mehler_kernel, mehler_kernel_with_floor,
    symmetrize, symmetrize_fast, MEHLER_FLOOR,
};
pub use overlap::{overlap_i, overlap_j, AxisOverlaps};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// How a kernel value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelMethod {
    ModeSum,
    Quadrature,
    ClosedForm,
}

impl KernelMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelMethod::ModeSum => "mode_sum",
            KernelMethod::Quadrature => "quadrature",
            KernelMethod::ClosedForm => "closed_form",
        }
    }
}

/// A kernel value normalized so a single-mode cavity gives `1/(1 + i kappa_t)`
/// at the TEM00 peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub value: Complex64,
    pub r: [f64; 2],
    pub r_prime: [f64; 2],
    pub method: KernelMethod,
    pub rel_err_est: f64,
}
