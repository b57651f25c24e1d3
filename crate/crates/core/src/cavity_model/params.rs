use crate::error::{invalid, Result};
use crate::units::mhz;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Which mode family the weights describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CavityKind {
    /// Even confocal family with linear dispersion and exponential cutoff.
    #[default]
    Confocal,
    /// Only the TEM00 mode carries weight.
    SingleMode,
}

/// Cavity geometry, loss, dispersion and cutoff. Frequencies in rad/us,
/// lengths in um.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub w0: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub delta_c: f64,
    pub delta_0: f64,
    pub g0: f64,
    pub wavelength: f64,
    pub n_max: usize,
    #[serde(default)]
    pub kind: CavityKind,
}

impl CavityParams {
    /// The 1 cm confocal cavity: w0 = 35 um, kappa/2pi = 137 kHz,
    /// eps/2pi = 2.6 MHz, g0/2pi = 1.47 MHz, Delta_C/2pi = -100 MHz.
    pub fn reference() -> Self {
        Self {
            w0: 35.0,
            kappa: mhz(0.137),
            epsilon: mhz(2.6),
            alpha: 3e-4,
            delta_c: mhz(-100.0),
            delta_0: 0.0,
            g0: mhz(1.47),
            wavelength: 0.78,
            n_max: 600,
            kind: CavityKind::Confocal,
        }
    }

    pub fn with_delta_c(mut self, delta_c: f64) -> Self {
        self.delta_c = delta_c;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_kind(mut self, kind: CavityKind) -> Self {
        self.kind = kind;
        self
    }

    /// Basic field invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.w0 > 0.0) {
            return invalid("w0 must be positive");
        }
        if !(self.kappa > 0.0) {
            return invalid("kappa must be positive");
        }
        if !(self.epsilon >= 0.0) {
            return invalid("epsilon must be non-negative");
        }
        if !(self.alpha >= 0.0) {
            return invalid("alpha must be non-negative");
        }
        if !(self.wavelength > 0.0) {
            return invalid("wavelength must be positive");
        }
        if !self.delta_c.is_finite() || !self.delta_0.is_finite() || !self.g0.is_finite() {
            return invalid("detunings and g0 must be finite");
        }
        Ok(())
    }

    /// `Delta_C + Delta_0`.
    pub fn effective_detuning(&self) -> f64 {
        self.delta_c + self.delta_0
    }

    /// `eps_t = -eps / (Delta_C + Delta_0)`.
    pub fn eps_tilde(&self) -> f64 {
        -self.epsilon / self.effective_detuning()
    }

    /// `kappa_t = kappa / (Delta_C + Delta_0)`.
    pub fn kappa_tilde(&self) -> f64 {
        self.kappa / self.effective_detuning()
    }

    /// Reduced parameters for the kernels; rejects configurations outside
    /// the dispersive regime.
    pub fn kernel(&self) -> Result<KernelParams> {
        self.validate()?;
        let d = self.effective_detuning();
        if !(d < 0.0) {
            return invalid(format!("Delta_C + Delta_0 = {d} must be negative"));
        }
        let kp = KernelParams {
            w0: self.w0,
            eps_t: self.eps_tilde(),
            kappa_t: self.kappa_tilde(),
            alpha: self.alpha,
            kind: self.kind,
        };
        kp.validate()?;
        Ok(kp)
    }
}

/// Reduced, dimensionless kernel parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub w0: f64,
    pub eps_t: f64,
    pub kappa_t: f64,
    pub alpha: f64,
    pub kind: CavityKind,
}

impl KernelParams {
    pub fn confocal(w0: f64, eps_t: f64, kappa_t: f64, alpha: f64) -> Self {
        Self { w0, eps_t, kappa_t, alpha, kind: CavityKind::Confocal }
    }

    pub fn single_mode(w0: f64, kappa_t: f64) -> Self {
        Self { w0, eps_t: 0.0, kappa_t, alpha: 0.0, kind: CavityKind::SingleMode }
    }

    /// `u = (1 + i kappa_t) / eps_t`.
    pub fn u(&self) -> Complex64 {
        Complex64::new(1.0, self.kappa_t) / self.eps_t
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w0 > 0.0) {
            return invalid("w0 must be positive");
        }
        if !(self.kappa_t.abs() < 1.0) {
            return invalid(format!("|kappa_t| = {} must be below 1", self.kappa_t.abs()));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return invalid("alpha must be non-negative");
        }
        if self.kind == CavityKind::Confocal && !(self.eps_t > 0.0 && self.eps_t.is_finite()) {
            return invalid(format!("eps_t = {} must be positive", self.eps_t));
        }
        Ok(())
    }
}

/// Transverse mode indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub l: usize,
    pub m: usize,
}

impl ModeIndex {
    pub fn new(l: usize, m: usize) -> Self {
        Self { l, m }
    }

    pub fn n(&self) -> usize {
        self.l + self.m
    }

    /// `cos(n pi / 4)` evaluated exactly for even n (0 for n = 2 mod 4).
    pub fn midplane_overlap(&self) -> f64 {
        match self.n() % 8 {
            0 => 1.0,
            4 => -1.0,
            n if n % 2 == 0 => 0.0,
            _ => std::f64::consts::FRAC_1_SQRT_2 * if matches!(self.n() % 8, 1 | 7) { 1.0 } else { -1.0 },
        }
    }

    /// All modes with `l + m <= n_max`.
    pub fn up_to(n_max: usize) -> impl Iterator<Item = ModeIndex> {
        (0..=n_max).flat_map(move |n| (0..=n).map(move |l| ModeIndex::new(l, n - l)))
    }
}

/// Mode weight `exp(-alpha n) / (1 + eps_t n + i kappa_t)` for `n = 0 mod 4`,
/// zero otherwise. For a single-mode cavity only `n = 0` survives.
pub fn mode_weight(mode: ModeIndex, kp: &KernelParams) -> Complex64 {
    let n = mode.n();
    match kp.kind {
        CavityKind::SingleMode => {
            if n == 0 {
                Complex64::new(1.0, kp.kappa_t).inv()
            } else {
                Complex64::new(0.0, 0.0)
            }
        }
        CavityKind::Confocal => {
            if n % 4 != 0 {
                return Complex64::new(0.0, 0.0);
            }
            let nf = n as f64;
            (-kp.alpha * nf).exp() / Complex64::new(1.0 + kp.eps_t * nf, kp.kappa_t)
        }
    }
}
