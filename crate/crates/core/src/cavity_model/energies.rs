use crate::error::{invalid, Result};
use crate::units::{BOHR_RADIUS_UM, HBAR, RB87_MASS};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// BEC position, Gaussian widths, atom number and trap. Lengths in um,
/// trap frequencies in rad/us, mass in kg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudParams {
    pub center: [f64; 2],
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub n_atoms: f64,
    pub trap_freqs: [f64; 3],
    pub scattering_length: f64,
    pub atom_mass: f64,
}

impl CloudParams {
    /// Build a cloud from Thomas-Fermi radii (um). The trap frequencies are
    /// chosen so the Thomas-Fermi chemical potential reproduces the radii,
    /// and the Gaussian widths are `ratio * R`.
    pub fn from_tf_radii(center: [f64; 2], radii: [f64; 3], n_atoms: f64, ratio: f64) -> Self {
        let a = 100.0 * BOHR_RADIUS_UM;
        let m = RB87_MASS;
        let r_si = radii.map(|r| r * 1e-6);
        let mu = 15.0 * HBAR * HBAR * (a * 1e-6) * n_atoms / (2.0 * m * r_si[0] * r_si[1] * r_si[2]);
        let trap_freqs = r_si.map(|r| (2.0 * mu / m).sqrt() / r * 1e-6);
        Self {
            center,
            sigma_x: ratio * radii[0],
            sigma_y: ratio * radii[1],
            n_atoms,
            trap_freqs,
            scattering_length: a,
            atom_mass: m,
        }
    }

    /// A Gaussian cloud with explicit widths and a default trap.
    pub fn gaussian(center: [f64; 2], sigma_x: f64, sigma_y: f64, n_atoms: f64) -> Self {
        let mut c = Self::from_tf_radii(center, [2.0 * sigma_x, 2.0 * sigma_y, 7.2], n_atoms, 0.5);
        c.sigma_x = sigma_x;
        c.sigma_y = sigma_y;
        c
    }

    pub fn with_center(mut self, center: [f64; 2]) -> Self {
        self.center = center;
        self
    }

    pub fn with_atoms(mut self, n_atoms: f64) -> Self {
        self.n_atoms = n_atoms;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_x > 0.0 && self.sigma_y > 0.0) {
            return invalid("cloud widths must be positive");
        }
        if !(self.n_atoms >= 1.0) {
            return invalid("n_atoms must be at least 1");
        }
        if self.trap_freqs.iter().any(|w| !(*w > 0.0)) {
            return invalid("trap frequencies must be positive");
        }
        if !(self.scattering_length > 0.0 && self.atom_mass > 0.0) {
            return invalid("scattering length and mass must be positive");
        }
        if !self.center.iter().all(|c| c.is_finite()) {
            return invalid("cloud center must be finite");
        }
        Ok(())
    }

    /// Reject positions outside `|r0| < w0 sqrt(pi)/2`.
    pub fn check_position(&self, w0: f64) -> Result<()> {
        let r = self.center[0].hypot(self.center[1]);
        let limit = w0 * PI.sqrt() / 2.0;
        if r >= limit {
            return invalid(format!("|r0| = {r:.3} um is outside the window {limit:.3} um"));
        }
        Ok(())
    }

    pub fn gamma_x(&self, w0: f64) -> f64 {
        gamma_factor(self.sigma_x, w0)
    }

    pub fn gamma_y(&self, w0: f64) -> f64 {
        gamma_factor(self.sigma_y, w0)
    }
}

/// Transverse pump strength and atomic detuning (rad/us).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpParams {
    pub rabi: f64,
    pub delta_a: f64,
}

impl PumpParams {
    /// True when `|Delta_A| > 100 max(|Delta_C|, N g0^2/|Delta_C|)`; logs a
    /// warning (once per process) otherwise.
    pub fn check_far_detuned(&self, delta_c: f64, g0: f64, n_atoms: f64) -> bool {
        static WARNED: std::sync::atomic::AtomicBool = std::sync::atomic::AtomicBool::new(false);
        let scale = delta_c.abs().max(n_atoms * g0 * g0 / delta_c.abs());
        let ok = self.delta_a.abs() > 100.0 * scale;
        if !ok && !WARNED.swap(true, std::sync::atomic::Ordering::Relaxed) {
            log::warn!(
                "atomic detuning |Delta_A| = {:.3e} is not far above the other scales ({:.3e})",
                self.delta_a.abs(),
                scale
            );
        }
        ok
    }
}

/// Energies derived from a cloud, all as angular frequencies (rad/us).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudEnergies {
    pub e_recoil: f64,
    pub mu_tf: f64,
    pub e_trap: f64,
    pub e_int: f64,
    pub e_dw: f64,
}

/// Recoil energy, Thomas-Fermi chemical potential and the derived energies.
pub fn cloud_energies(cloud: &CloudParams, wavelength: f64) -> CloudEnergies {
    let m = cloud.atom_mass;
    let k = 2.0 * PI / (wavelength * 1e-6);
    let e_recoil = HBAR * k * k / (2.0 * m) * 1e-6;
    let w_si: f64 = cloud.trap_freqs.iter().map(|w| w * 1e6).product();
    let a = cloud.scattering_length * 1e-6;
    let mu_j = (15.0 * HBAR * HBAR * a * cloud.n_atoms * w_si).powf(0.4) * m.powf(0.2) / 2.0;
    let mu_tf = mu_j / HBAR * 1e-6;
    let n = cloud.n_atoms;
    CloudEnergies {
        e_recoil,
        mu_tf,
        e_trap: 3.0 / 7.0 * mu_tf * n,
        e_int: 2.0 / 7.0 * mu_tf * n,
        e_dw: 2.0 * e_recoil + 8.0 / 7.0 * mu_tf,
    }
}

/// Thomas-Fermi radius (um) along an axis with trap frequency `omega` (rad/us).
pub fn tf_radius(mu_tf: f64, omega: f64, mass: f64) -> f64 {
    let mu_j = mu_tf * 1e6 * HBAR;
    let w = omega * 1e6;
    (2.0 * mu_j / (mass * w * w)).sqrt() * 1e6
}

/// `(1 - 2 sigma^2/w0^2) / (1 + 2 sigma^2/w0^2)`.
pub fn gamma_factor(sigma: f64, w0: f64) -> f64 {
    let k = 2.0 * sigma * sigma / (w0 * w0);
    (1.0 - k) / (1.0 + k)
}
