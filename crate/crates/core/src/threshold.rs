//! Superradiant threshold: the cavity-mediated energy `E_cav`, the critical
//! pump strength, the linear stability matrix and scan generators.

use crate::cavity_model::{cloud_energies, CavityParams, CloudParams, PumpParams};
use crate::error::{Error, Result};
use crate::greens::{greens_cloud_with, greens_dispersive_with, KernelSample};
use crate::quadrature::{QuadratureSpec, Refinement};
use nalgebra::Matrix4;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Typical atom number used to normalize threshold strengths.
pub const N0: f64 = 3e5;

/// Quadrature and model switches for threshold evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOptions {
    /// Include the second-order (dispersive shift) term.
    pub dispersive: bool,
    pub spec_1d: QuadratureSpec,
    pub spec_2d: QuadratureSpec,
    pub refinement: Refinement,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            dispersive: true,
            spec_1d: QuadratureSpec::kernel(),
            spec_2d: QuadratureSpec::double(),
            refinement: Refinement::Adaptive,
        }
    }
}

impl ThresholdOptions {
    pub fn first_order_only() -> Self {
        Self { dispersive: false, ..Self::default() }
    }

    /// Fixed rules suitable for repeated evaluation inside a fit.
    pub fn fixed(panels_1d: usize, panels_2d: usize) -> Self {
        let mut s1 = QuadratureSpec::kernel();
        s1.panels = panels_1d;
        let mut s2 = QuadratureSpec::double();
        s2.panels = panels_2d;
        Self { dispersive: true, spec_1d: s1, spec_2d: s2, refinement: Refinement::Fixed }
    }
}

/// The two cloud-averaged kernel integrals of the threshold condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionIntegrals {
    /// `int int rho rho D`.
    pub first_order: Complex64,
    /// `int int int rho rho rho D D`; zero when disabled.
    pub dispersive: Complex64,
}

/// Result of [`critical_pump`]. Frequencies in rad/us.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub omega_c: f64,
    /// `(N / N0) omega_c^2`.
    pub omega_c_sq_norm: f64,
    /// `E_cav / Omega^2`.
    pub e_cav_per_omega_sq: Complex64,
    pub first_order: Complex64,
    pub dispersive: Complex64,
    pub e_dw: f64,
    pub n_atoms: f64,
}

impl ThresholdResult {
    /// `sqrt(N / N0) omega_c`.
    pub fn omega_c_norm(&self) -> f64 {
        self.omega_c_sq_norm.sqrt()
    }
}

/// Evaluate the kernel integrals at the cloud position.
pub fn interaction_integrals(cloud: &CloudParams, cavity: &CavityParams, opts: &ThresholdOptions) -> Result<InteractionIntegrals> {
    let kp = cavity.kernel()?;
    let r0 = cloud.center;
    let first: KernelSample =
        greens_cloud_with(r0, r0, cloud, &kp, &opts.spec_1d, opts.refinement)?;
    let dispersive = if opts.dispersive {
        greens_dispersive_with(r0, r0, r0, cloud, &kp, &opts.spec_2d, opts.refinement)?.value
    } else {
        Complex64::new(0.0, 0.0)
    };
    Ok(InteractionIntegrals { first_order: first.value, dispersive })
}

/// Combine the integrals into `E_cav / Omega^2`.
pub fn e_cav_from_integrals(ints: &InteractionIntegrals, n_atoms: f64, cavity: &CavityParams, delta_a: f64) -> Complex64 {
    let d = cavity.effective_detuning();
    let g2 = cavity.g0 * cavity.g0;
    let pre = n_atoms * n_atoms * g2 / (2.0 * delta_a * delta_a * d);
    let second = n_atoms * g2 / (2.0 * delta_a * d);
    pre * (ints.first_order + second * ints.dispersive)
}

/// `E_cav / Omega^2` for the cloud at its center position.
pub fn e_cav_per_omega_sq(
    cloud: &CloudParams,
    cavity: &CavityParams,
    delta_a: f64,
    opts: &ThresholdOptions,
) -> Result<Complex64> {
    let ints = interaction_integrals(cloud, cavity, opts)?;
    Ok(e_cav_from_integrals(&ints, cloud.n_atoms, cavity, delta_a))
}

/// `E_cav` at the pump strength in `pump`.
pub fn e_cav(cloud: &CloudParams, cavity: &CavityParams, pump: &PumpParams, opts: &ThresholdOptions) -> Result<Complex64> {
    Ok(e_cav_per_omega_sq(cloud, cavity, pump.delta_a, opts)? * (pump.rabi * pump.rabi))
}

fn check_inputs(cloud: &CloudParams, cavity: &CavityParams, pump: &PumpParams) -> Result<()> {
    cloud.validate()?;
    cavity.validate()?;
    cloud.check_position(cavity.w0)?;
    let d = cavity.effective_detuning();
    if d >= 0.0 {
        return Err(Error::NoThreshold(d));
    }
    if !(pump.delta_a < 0.0) {
        return Err(Error::InvalidParameter("Delta_A must be negative".into()));
    }
    pump.check_far_detuned(cavity.effective_detuning(), cavity.g0, cloud.n_atoms);
    Ok(())
}

/// Build the threshold result from the integrals.
pub fn threshold_from_integrals(
    ints: &InteractionIntegrals,
    cloud: &CloudParams,
    cavity: &CavityParams,
    delta_a: f64,
) -> Result<ThresholdResult> {
    let e = e_cav_from_integrals(ints, cloud.n_atoms, cavity, delta_a);
    if !(e.re < 0.0) {
        return Err(Error::NoThreshold(e.re));
    }
    let e_dw = cloud_energies(cloud, cavity.wavelength).e_dw;
    let omega_sq = cloud.n_atoms * e_dw / (-2.0 * e.re);
    Ok(ThresholdResult {
        omega_c: omega_sq.sqrt(),
        omega_c_sq_norm: cloud.n_atoms / N0 * omega_sq,
        e_cav_per_omega_sq: e,
        first_order: ints.first_order,
        dispersive: ints.dispersive,
        e_dw,
        n_atoms: cloud.n_atoms,
    })
}

/// Critical pump strength `Omega_c^2 = N E_dw / (-2 Re(E_cav / Omega^2))`.
pub fn critical_pump(cloud: &CloudParams, cavity: &CavityParams, pump: &PumpParams, opts: &ThresholdOptions) -> Result<ThresholdResult> {
    check_inputs(cloud, cavity, pump)?;
    let ints = interaction_integrals(cloud, cavity, opts)?;
    threshold_from_integrals(&ints, cloud, cavity, pump.delta_a)
}

/// Linearized dynamics of the scattered components around the normal state.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub matrix: Matrix4<Complex64>,
    pub analytic_eigs: [Complex64; 4],
    pub numeric_eigs: [Complex64; 4],
    pub unstable: bool,
    /// `4 N E_r (N E_r + E_cav + 2 E_int)`.
    pub radicand: Complex64,
    /// Largest imaginary part of the eigenvalues: the slow kappa-driven rate
    /// (or the superradiant growth rate above threshold).
    pub growth_rate: f64,
    /// Largest `|analytic - numeric|` after matching.
    pub max_mismatch: f64,
}

/// Build and diagonalize the 4x4 stability matrix from the energies
/// `N E_r`, `E_int` and `E_cav` (all rad/us).
pub fn stability_from_energies(n_e_r: f64, e_int: f64, e_cav: Complex64) -> StabilityReport {
    let c = |x: f64| Complex64::new(x, 0.0);
    let a = c(2.0 * n_e_r + 2.0 * e_int) + e_cav;
    let b = c(2.0 * e_int) + e_cav;
    let z = c(0.0);
    #[rustfmt::skip]
    let matrix = Matrix4::new(
        a.conj(), z, z, b.conj(),
        z, a, b, z,
        z, -b, -a, z,
        -b.conj(), z, z, -a.conj(),
    );
    let radicand = 4.0 * n_e_r * (c(n_e_r) + e_cav + c(2.0 * e_int));
    let radicand_conj = 4.0 * n_e_r * (c(n_e_r) + e_cav.conj() + c(2.0 * e_int));
    let s = radicand.sqrt();
    let sc = radicand_conj.sqrt();
    let analytic_eigs = [s, -s, sc, -sc];
    let numeric = matrix.schur().eigenvalues().map(|v| [v[0], v[1], v[2], v[3]]).unwrap_or([c(f64::NAN); 4]);
    // Greedy matching of numeric to analytic eigenvalues.
    let mut used = [false; 4];
    let mut numeric_eigs = [c(f64::NAN); 4];
    let mut max_mismatch: f64 = 0.0;
    for (i, ae) in analytic_eigs.iter().enumerate() {
        let mut best = None;
        for (j, ne) in numeric.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (ae - ne).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, d)) = best {
            used[j] = true;
            numeric_eigs[i] = numeric[j];
            max_mismatch = max_mismatch.max(d);
        } else {
            max_mismatch = f64::NAN;
        }
    }
    let growth_rate = analytic_eigs.iter().map(|e| e.im).fold(f64::NEG_INFINITY, f64::max);
    StabilityReport {
        matrix,
        analytic_eigs,
        numeric_eigs,
        unstable: radicand.re < 0.0,
        radicand,
        growth_rate,
        max_mismatch,
    }
}

/// Stability analysis at pump strength `omega`.
pub fn stability_matrix(
    cloud: &CloudParams,
    cavity: &CavityParams,
    pump: &PumpParams,
    omega: f64,
    opts: &ThresholdOptions,
) -> Result<StabilityReport> {
    let e = e_cav_per_omega_sq(cloud, cavity, pump.delta_a, opts)? * (omega * omega);
    let en = cloud_energies(cloud, cavity.wavelength);
    Ok(stability_from_energies(cloud.n_atoms * en.e_recoil, en.e_int, e))
}

/// One row of a detuning or position scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    /// Detuning (rad/us) or position (um).
    pub x: f64,
    pub result: Result<ThresholdResult>,
}

impl ScanRow {
    /// Cloud-averaged enhancement `Re int int rho rho D`.
    pub fn enhancement(&self) -> Option<f64> {
        self.result.as_ref().ok().map(|r| r.first_order.re)
    }
}

/// Threshold versus pump-cavity detuning for a fixed cloud.
pub fn scan_detuning(
    cloud: &CloudParams,
    cavity_base: &CavityParams,
    pump: &PumpParams,
    detunings: &[f64],
    opts: &ThresholdOptions,
) -> Vec<ScanRow> {
    detunings
        .par_iter()
        .map(|&d| ScanRow { x: d, result: critical_pump(cloud, &cavity_base.with_delta_c(d), pump, opts) })
        .collect()
}

/// Threshold versus cloud position along x.
pub fn scan_position(
    cloud_template: &CloudParams,
    cavity: &CavityParams,
    pump: &PumpParams,
    x_positions: &[f64],
    opts: &ThresholdOptions,
) -> Vec<ScanRow> {
    x_positions
        .par_iter()
        .map(|&x| {
            let cloud = cloud_template.with_center([x, cloud_template.center[1]]);
            ScanRow { x, result: critical_pump(&cloud, cavity, pump, opts) }
        })
        .collect()
}
