use crate::cavity_model::{cloud_energies, mode_function, CavityKind, CavityParams, CloudParams, ModeIndex};
use crate::error::{invalid, Error, Result};
use crate::greens::AxisOverlaps;
use crate::threshold::{threshold_from_integrals, InteractionIntegrals, ThresholdResult};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

/// Largest allowed `max_mu |N g0^2 J_mumu / (2 Delta_A (Delta_mu + i kappa))|`.
pub const PERTURBATION_LIMIT: f64 = 0.3;

/// Condensate amplitudes, mode amplitudes and time (us).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub psi_0: Complex64,
    pub psi_f: Complex64,
    pub psi_b: Complex64,
    pub alphas: Vec<Complex64>,
    pub time: f64,
}

impl MeanFieldState {
    /// `(1, 0, 0)` with empty modes.
    pub fn normal(n_modes: usize) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self { psi_0: Complex64::new(1.0, 0.0), psi_f: z, psi_b: z, alphas: vec![z; n_modes], time: 0.0 }
    }

    /// Normal state with amplitude `seed` moved into `psi_f`.
    pub fn seeded(n_modes: usize, seed: f64) -> Self {
        let mut s = Self::normal(n_modes);
        s.psi_0 = Complex64::new((1.0 - seed * seed).sqrt(), 0.0);
        s.psi_f = Complex64::new(seed, 0.0);
        s
    }

    pub fn atomic_norm(&self) -> f64 {
        self.psi_0.norm_sqr() + self.psi_f.norm_sqr() + self.psi_b.norm_sqr()
    }

    /// Photon flux proxy `2 kappa sum |alpha_mu|^2`.
    pub fn flux(&self, kappa: f64) -> f64 {
        2.0 * kappa * self.alphas.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    /// `[psi_0, psi_f, psi_b, alpha_0, ...]`.
    pub fn to_vector(&self) -> Vec<Complex64> {
        let mut v = vec![self.psi_0, self.psi_f, self.psi_b];
        v.extend_from_slice(&self.alphas);
        v
    }

    pub fn from_vector(v: &[Complex64], time: f64) -> Self {
        Self { psi_0: v[0], psi_f: v[1], psi_b: v[2], alphas: v[3..].to_vec(), time }
    }
}

/// The truncated mode set with cloud overlaps and everything the equations
/// of motion need, precomputed. The cutoff `exp(-alpha n)` is split evenly
/// between the two ends of each coupling, so `I` carries `exp(-alpha n/2)`
/// and the longitudinal factor `O_mu = cos(n pi / 4)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsModel {
    pub modes: Vec<ModeIndex>,
    /// `I_mu O_mu exp(-alpha n_mu / 2)`.
    pub coupling: Vec<f64>,
    /// `J_{mu,nu} O_mu O_nu exp(-alpha (n_mu + n_nu) / 2)`.
    pub j: DMatrix<f64>,
    /// `Delta_mu = Delta_C + Delta_0 - eps n_mu`.
    pub detunings: Vec<f64>,
    pub kappa: f64,
    pub n_atoms: f64,
    pub g0: f64,
    pub delta_a: f64,
    pub n_e_r: f64,
    pub e_trap: f64,
    pub e_int: f64,
    /// Gauge offset `E_trap + 2 E_int`, which makes the normal state stationary.
    pub eta: f64,
    pub cutoff: f64,
    pub w0: f64,
    pub frozen_atoms: bool,
}

impl DynamicsModel {
    /// Modes with `n = l + m <= n_max` and `n = 0 mod 4` (the others have
    /// `O_mu = 0` or lie outside the even family); TEM00 only for a
    /// single-mode cavity.
    pub fn new(cloud: &CloudParams, cavity: &CavityParams, delta_a: f64, n_max: usize) -> Result<Self> {
        cloud.validate()?;
        cavity.kernel()?;
        if !(delta_a < 0.0) {
            return invalid("Delta_A must be negative (red pump detuning)");
        }
        let modes: Vec<ModeIndex> = match cavity.kind {
            CavityKind::SingleMode => vec![ModeIndex::new(0, 0)],
            CavityKind::Confocal => ModeIndex::up_to(n_max).filter(|m| m.n() % 4 == 0).collect(),
        };
        let l_max = modes.iter().map(|m| m.l.max(m.m)).max().unwrap_or(0);
        let ov = AxisOverlaps::new(cloud, cavity.w0, l_max);
        let scale: Vec<f64> = modes
            .iter()
            .map(|m| m.midplane_overlap() * (-0.5 * cavity.alpha * m.n() as f64).exp())
            .collect();
        let coupling = modes.iter().zip(&scale).map(|(m, s)| ov.i(*m) * s).collect();
        let j = DMatrix::from_fn(modes.len(), modes.len(), |a, b| ov.j(modes[a], modes[b]) * scale[a] * scale[b]);
        let detunings = modes.iter().map(|m| cavity.effective_detuning() - cavity.epsilon * m.n() as f64).collect();
        let en = cloud_energies(cloud, cavity.wavelength);
        Ok(Self {
            modes,
            coupling,
            j,
            detunings,
            kappa: cavity.kappa,
            n_atoms: cloud.n_atoms,
            g0: cavity.g0,
            delta_a,
            n_e_r: cloud.n_atoms * en.e_recoil,
            e_trap: en.e_trap,
            e_int: en.e_int,
            eta: en.e_trap + 2.0 * en.e_int,
            cutoff: cavity.alpha,
            w0: cavity.w0,
            frozen_atoms: false,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// `N g0 Omega / (sqrt 2 Delta_A)`.
    pub fn pump_coupling(&self, omega: f64) -> f64 {
        self.n_atoms * self.g0 * omega / (SQRT_2 * self.delta_a)
    }

    /// `N g0^2 / (2 Delta_A)`.
    pub fn dispersive_shift(&self) -> f64 {
        self.n_atoms * self.g0 * self.g0 / (2.0 * self.delta_a)
    }

    fn denom(&self, k: usize) -> Complex64 {
        Complex64::new(self.detunings[k], self.kappa)
    }

    /// `max_mu |N g0^2 J_mumu / (2 Delta_A (Delta_mu + i kappa))|`.
    pub fn perturbation_proxy(&self) -> f64 {
        let d = self.dispersive_shift();
        (0..self.n_modes()).map(|k| (d * self.j[(k, k)] / self.denom(k)).norm()).fold(0.0, f64::max)
    }

    /// Threshold kernel integrals of the truncated mode set:
    /// `sum_mu w_mu I_mu^2` and `sum_mu,nu w_mu w_nu I_mu J_munu I_nu` with
    /// `w_mu = Delta_eff / (Delta_mu + i kappa)`; the cutoff factors are
    /// already in `coupling` and `j`.
    pub fn interaction_integrals(&self) -> InteractionIntegrals {
        let d_eff = self.detunings[0];
        let w: Vec<Complex64> = (0..self.n_modes()).map(|k| d_eff / self.denom(k)).collect();
        let u: Vec<Complex64> = (0..self.n_modes()).map(|k| w[k] * self.coupling[k]).collect();
        let first_order = u.iter().zip(&self.coupling).map(|(a, c)| a * *c).sum();
        let dispersive = (0..self.n_modes())
            .map(|a| (0..self.n_modes()).map(|b| u[a] * self.j[(a, b)] * u[b]).sum::<Complex64>())
            .sum();
        InteractionIntegrals { first_order, dispersive }
    }

    /// Critical pump strength of the truncated model, the reference for
    /// onsets observed in time-domain runs.
    pub fn critical_pump(&self, cloud: &CloudParams, cavity: &CavityParams) -> Result<ThresholdResult> {
        threshold_from_integrals(&self.interaction_integrals(), cloud, cavity, self.delta_a)
    }

    /// Transverse cavity field `sum_mu alpha_mu O_mu exp(-alpha n/2) Xi_mu(r)`.
    pub fn field_at(&self, alphas: &[Complex64], r: [f64; 2]) -> Complex64 {
        self.modes
            .iter()
            .zip(alphas)
            .map(|(m, a)| a * m.midplane_overlap() * (-0.5 * self.cutoff * m.n() as f64).exp() * mode_function(*m, r, self.w0))
            .sum()
    }
}

/// Right-hand side of the mean-field equations of motion, written as
/// `d/dt = -i (...)`. With `frozen_atoms` set, the condensate derivatives are
/// zero.
pub fn eom_rhs(model: &DynamicsModel, state: &MeanFieldState, omega: f64) -> MeanFieldState {
    let mut out = state.clone();
    let y = state.to_vector();
    let dy = rhs_vector(model, &y, omega);
    out.psi_0 = dy[0];
    out.psi_f = dy[1];
    out.psi_b = dy[2];
    out.alphas = dy[3..].to_vec();
    out
}

pub(crate) fn rhs_vector(model: &DynamicsModel, y: &[Complex64], omega: f64) -> Vec<Complex64> {
    let mi = Complex64::new(0.0, -1.0);
    let (p0, pf, pb) = (y[0], y[1], y[2]);
    let alphas = &y[3..];
    let c = model.pump_coupling(omega);
    let d = model.dispersive_shift();
    let x = p0 * pf.conj() + p0.conj() * pb;
    let mut out = Vec::with_capacity(y.len());
    let (n0, nf, nb) = (p0.norm_sqr(), pf.norm_sqr(), pb.norm_sqr());
    let s: Complex64 = model.coupling.iter().zip(alphas).map(|(i, a)| a * *i).sum();
    let e = model.e_int;
    if model.frozen_atoms {
        out.extend([Complex64::new(0.0, 0.0); 3]);
    } else {
        let h0 = (model.e_trap + e * (2.0 * n0 + 4.0 * nf + 4.0 * nb) - model.eta) * p0
            + 4.0 * e * p0.conj() * pf * pb
            + c * (s * pf + s.conj() * pb);
        let base = 2.0 * model.n_e_r + model.e_trap - model.eta;
        let hf = (base + e * (4.0 * n0 + 3.0 * nf + 6.0 * nb)) * pf + 2.0 * e * p0 * p0 * pb.conj() + c * p0 * s.conj();
        let hb = (base + e * (4.0 * n0 + 6.0 * nf + 3.0 * nb)) * pb + 2.0 * e * p0 * p0 * pf.conj() + c * p0 * s;
        out.extend([mi * h0, mi * hf, mi * hb]);
    }
    for k in 0..model.n_modes() {
        let mix: Complex64 = (0..model.n_modes()).map(|q| alphas[q] * model.j[(k, q)]).sum();
        let h = -model.denom(k) * alphas[k] + c * model.coupling[k] * x + d * mix;
        out.push(mi * h);
    }
    out
}

/// Instantaneous steady state of the modes with the dispersive mixing to
/// first order, `(1 - A)^{-1} ~ 1 + A`.
pub fn adiabatic_mode_amplitudes(model: &DynamicsModel, state: &MeanFieldState, omega: f64) -> Result<Vec<Complex64>> {
    let proxy = model.perturbation_proxy();
    if proxy > PERTURBATION_LIMIT {
        return Err(Error::PerturbationInvalid(proxy));
    }
    if proxy > 0.1 {
        log::warn!("dispersive expansion parameter {proxy:.3} is not small");
    }
    let x = state.psi_0 * state.psi_f.conj() + state.psi_0.conj() * state.psi_b;
    let pre = x * model.pump_coupling(omega);
    let d = model.dispersive_shift();
    let first: Vec<Complex64> = (0..model.n_modes()).map(|k| model.coupling[k] / model.denom(k)).collect();
    Ok((0..model.n_modes())
        .map(|k| {
            let mix: Complex64 = (0..model.n_modes()).map(|q| first[q] * model.j[(k, q)]).sum();
            pre * (first[k] + d * mix / model.denom(k))
        })
        .collect())
}

/// Relative change of the adiabatic flux when `n_max` grows by four, at a
/// unit scattered amplitude.
pub fn truncation_change(cloud: &CloudParams, cavity: &CavityParams, delta_a: f64, n_max: usize) -> Result<f64> {
    let flux = |n: usize| -> Result<f64> {
        let m = DynamicsModel::new(cloud, cavity, delta_a, n)?;
        let mut s = MeanFieldState::normal(m.n_modes());
        s.psi_f = Complex64::new(1.0, 0.0);
        let a = adiabatic_mode_amplitudes(&m, &s, 1.0)?;
        s.alphas = a;
        Ok(s.flux(m.kappa))
    };
    let (f0, f1) = (flux(n_max)?, flux(n_max + 4)?);
    Ok((f1 - f0).abs() / f1.max(f64::MIN_POSITIVE))
}
