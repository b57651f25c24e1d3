//! Synthetic threshold datasets for fit validation.

use super::model::{FitParams, ModelContext, ScanDataset, ScanKind, ScanPoint};
use crate::cavity_model::{cloud_energies, CloudParams, PumpParams};
use crate::error::{invalid, Result};
use crate::threshold::critical_pump;
use crate::units::mhz;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Gaussian width per Thomas-Fermi radius that matches the second moment of
/// the Thomas-Fermi profile.
pub const TF_TO_GAUSS: f64 = 0.377_964_473_009_227_2;

/// Layout of one synthetic scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanDesign {
    pub label: String,
    pub kind: ScanKind,
    /// Thomas-Fermi radii (um).
    pub radii: [f64; 3],
    pub tf_to_gauss: f64,
    pub n_atoms: f64,
    /// Cloud center for detuning scans; the y coordinate for position scans.
    pub center: [f64; 2],
    /// Fixed Delta_C (rad/us) for position scans.
    pub delta_c: f64,
    /// Delta_C values (rad/us) or x positions (um).
    pub xs: Vec<f64>,
    pub amplitude_index: usize,
}

impl ScanDesign {
    pub fn cloud(&self, x: f64) -> CloudParams {
        let center = match self.kind {
            ScanKind::DetuningScan => self.center,
            ScanKind::PositionScan => [x, self.center[1]],
        };
        CloudParams::from_tf_radii(center, self.radii, self.n_atoms, self.tf_to_gauss)
    }

    pub fn delta_c_at(&self, x: f64) -> f64 {
        match self.kind {
            ScanKind::DetuningScan => x,
            ScanKind::PositionScan => self.delta_c,
        }
    }
}

/// Multiplicative log-normal noise on `Omega_c^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub rel_sigma: f64,
}

/// Eight on-center detuning scans and eighteen position scans at the scale
/// of the measured data set.
pub fn reference_design() -> Vec<ScanDesign> {
    let shapes_det: [([f64; 3], f64); 4] =
        [([11.9, 13.2, 7.2], 3.6e5), ([6.0, 6.5, 7.0], 3.0e5), ([3.1, 7.6, 5.3], 2.3e5), ([4.5, 4.5, 6.0], 2.6e5)];
    let mut out = Vec::new();
    for k in 0..8 {
        let (radii, n) = shapes_det[k % 4];
        let max_det = if k % 4 == 2 { 170.0 } else { 320.0 };
        let xs = (0..7).map(|j| mhz(-40.0 - (max_det - 40.0) * j as f64 / 6.0)).collect();
        out.push(ScanDesign {
            label: format!("detuning-{k}"),
            kind: ScanKind::DetuningScan,
            radii,
            tf_to_gauss: TF_TO_GAUSS,
            n_atoms: n * (1.0 - 0.05 * (k / 4) as f64),
            center: [0.0, 0.0],
            delta_c: 0.0,
            xs,
            amplitude_index: k,
        });
    }
    let shapes_pos: [[f64; 3]; 3] = [[3.1, 7.6, 5.3], [4.0, 9.0, 6.0], [5.5, 8.0, 6.5]];
    let dets = [-60.0, -120.0, -170.0, -240.0, -120.0, -170.0];
    for k in 0..18 {
        out.push(ScanDesign {
            label: format!("position-{k}"),
            kind: ScanKind::PositionScan,
            radii: shapes_pos[k % 3],
            tf_to_gauss: TF_TO_GAUSS,
            n_atoms: 2.0e5 + 1.0e4 * (k % 5) as f64,
            center: [0.0, if k >= 12 { 1.0 } else { 0.0 }],
            delta_c: mhz(dets[k % 6]),
            xs: (-5..=5).map(|j| 2.0 * j as f64).collect(),
            amplitude_index: 8 + k,
        });
    }
    out
}

/// Amplitudes spread over `[1.3, 2.0]` in a fixed shuffled order.
pub fn reference_amplitudes(n: usize) -> Vec<f64> {
    (0..n).map(|k| 1.3 + 0.7 * ((k * 7) % n) as f64 / (n.max(2) - 1) as f64).collect()
}

/// Forward-model every design row through the threshold module, divide by the
/// dataset amplitude and apply noise. Rows without a threshold are dropped.
pub fn synthesize_dataset(
    truth: &FitParams,
    ctx: &ModelContext,
    designs: &[ScanDesign],
    noise: NoiseModel,
    seed: u64,
) -> Result<Vec<ScanDataset>> {
    if !(noise.rel_sigma >= 0.0) {
        return invalid("noise level must be non-negative");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(designs.len());
    for d in designs {
        let Some(&amp) = truth.amplitudes.get(d.amplitude_index) else {
            return invalid(format!("{}: no amplitude {}", d.label, d.amplitude_index));
        };
        let mut rows = Vec::with_capacity(d.xs.len());
        for &x in &d.xs {
            let cloud = d.cloud(x);
            let delta_c = d.delta_c_at(x);
            let cav = ctx.cavity(&truth.globals, delta_c);
            let pump = PumpParams { rabi: 1.0, delta_a: ctx.delta_a };
            let z: f64 = StandardNormal.sample(&mut rng);
            let t = match critical_pump(&cloud, &cav, &pump, &ctx.threshold) {
                Ok(t) => t,
                Err(e) => {
                    log::warn!("{} x = {x}: row dropped ({e})", d.label);
                    continue;
                }
            };
            let omega_c_sq = t.omega_c * t.omega_c / amp * (noise.rel_sigma * z).exp();
            let e_dw = cloud_energies(&cloud, cav.wavelength).e_dw;
            let mut p = ScanPoint {
                kind: d.kind,
                x,
                delta_c,
                omega_c_sq,
                n_atoms: cloud.n_atoms,
                cloud,
                e_dw,
                weight: 1.0,
            };
            p.weight = p.relative_weight();
            rows.push(p);
        }
        out.push(ScanDataset { label: d.label.clone(), rows, amplitude_index: d.amplitude_index });
    }
    Ok(out)
}
