//! Position-scan profile analysis: drift correction and Voigt deconvolution
//! of the cloud size from the cavity resolution.

use super::lm::{covariance, minimize, numeric_jacobian, LmOptions};
use super::model::ScanDataset;
use crate::cavity_model::{CavityParams, CloudParams, PumpParams};
use crate::error::{invalid, Error, Result};
use crate::special::{voigt, voigt_hwhm};
use crate::threshold::{critical_pump, ThresholdOptions};
use serde::{Deserialize, Serialize};

/// `(x, E_dw / (N Omega_c^2))` pairs of a position scan, sorted by x.
pub fn interaction_profile(scan: &ScanDataset) -> (Vec<f64>, Vec<f64>) {
    let mut pts: Vec<(f64, f64)> = scan.rows.iter().map(|r| (r.x, r.y())).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.into_iter().unzip()
}

/// Forward-simulated interaction profile `E_dw / (N Omega_c^2)` along x.
pub fn simulate_position_profile(
    cloud_template: &CloudParams,
    cavity: &CavityParams,
    delta_a: f64,
    xs: &[f64],
    opts: &ThresholdOptions,
) -> Result<Vec<f64>> {
    let pump = PumpParams { rabi: 1.0, delta_a };
    xs.iter()
        .map(|&x| {
            let cloud = cloud_template.with_center([x, cloud_template.center[1]]);
            let t = critical_pump(&cloud, cavity, &pump, opts)?;
            Ok(t.e_dw / (cloud.n_atoms * t.omega_c * t.omega_c))
        })
        .collect()
}

/// Half width at half maximum of a sampled peak above its smaller edge
/// value, by linear interpolation.
pub fn sampled_hwhm(x: &[f64], y: &[f64]) -> Result<f64> {
    let (k, &peak) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).ok_or(Error::NoPeak)?;
    let base = y[0].min(y[y.len() - 1]);
    let half = base + 0.5 * (peak - base);
    if !(peak > base) || k == 0 || k == y.len() - 1 {
        return Err(Error::NoPeak);
    }
    let cross = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = k;
        for j in range {
            if y[j] <= half {
                let t = (y[prev] - half) / (y[prev] - y[j]);
                return Some(x[prev] + t * (x[j] - x[prev]));
            }
            prev = j;
        }
        None
    };
    let right = cross(&mut ((k + 1)..y.len())).ok_or(Error::NoPeak)?;
    let left = cross(&mut (0..k).rev()).ok_or(Error::NoPeak)?;
    Ok(0.5 * (right - left))
}

/// Result of fitting an offset Gaussian to a single-peaked scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetCorrection {
    pub shift: f64,
    pub x_corrected: Vec<f64>,
    pub amplitude: f64,
    pub width: f64,
    pub offset: f64,
}

fn lm_small() -> LmOptions {
    LmOptions { max_iterations: 500, ftol: 1e-14, xtol: 1e-12, lambda0: 1e-3 }
}

/// Fit `c + a exp(-(x - x0)^2 / (2 s^2))` and shift x so the peak sits at 0.
pub fn peak_offset_correction(x: &[f64], y: &[f64]) -> Result<OffsetCorrection> {
    if x.len() != y.len() || x.len() < 5 {
        return invalid("peak fit needs at least five (x, y) pairs");
    }
    let hw = sampled_hwhm(x, y)?;
    let (k, &peak) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).ok_or(Error::NoPeak)?;
    let base = y.iter().copied().fold(f64::INFINITY, f64::min);
    let span = x[x.len() - 1] - x[0];
    let p0 = [base, peak - base, x[k], hw / (2.0 * std::f64::consts::LN_2).sqrt()];
    let res = |p: &[f64]| -> Result<Vec<f64>> {
        Ok(x.iter()
            .zip(y)
            .map(|(xi, yi)| p[0] + p[1] * (-(xi - p[2]).powi(2) / (2.0 * p[3] * p[3])).exp() - yi)
            .collect())
    };
    let scale = (peak - base).abs();
    let steps = [1e-7 * scale, 1e-7 * scale, 1e-7 * span, 1e-7 * span];
    let out = minimize(
        &p0,
        &[scale, scale, span, span],
        res,
        |p, _| numeric_jacobian(p, &steps, res),
        |p| p[3] = p[3].abs().max(1e-9 * span),
        &lm_small(),
    )?;
    let p = out.params;
    if !(p[1] > 0.0) {
        return Err(Error::NoPeak);
    }
    Ok(OffsetCorrection {
        shift: p[2],
        x_corrected: x.iter().map(|v| v - p[2]).collect(),
        amplitude: p[1],
        width: p[3],
        offset: p[0],
    })
}

/// Voigt decomposition of a position-scan profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoigtDeconvolution {
    /// HWHM of the fitted dip profile in the scan coordinate `r0`.
    pub hwhm_total: f64,
    /// Lorentzian HWHM mapped to the kernel argument `2 r0`: the resolution.
    pub hwhm_lorentz: f64,
    pub hwhm_lorentz_sigma: f64,
    /// Fixed Gaussian sigma in the scan coordinate.
    pub sigma_gauss: f64,
    pub center: f64,
    pub amplitude: f64,
    pub offset: f64,
}

/// Fit `c + a V(x - x0; sigma_G, gamma)` with `sigma_G = sigma_cloud / sqrt 2`
/// held fixed. The mirror peak depends on `2 r0`, so both the pair-density
/// width `sqrt 2 sigma` and the kernel width appear halved in `r0`; the
/// returned Lorentzian HWHM is mapped back to the kernel argument.
pub fn voigt_deconvolve(x: &[f64], y: &[f64], sigma_cloud: f64) -> Result<VoigtDeconvolution> {
    if x.len() != y.len() || x.len() < 6 {
        return invalid("Voigt fit needs at least six (x, y) pairs");
    }
    if !(sigma_cloud >= 0.0) {
        return invalid("cloud width must be non-negative");
    }
    let sg = sigma_cloud / std::f64::consts::SQRT_2;
    let hw = sampled_hwhm(x, y)?;
    let (k, &peak) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).ok_or(Error::NoPeak)?;
    let base = y[0].min(y[y.len() - 1]);
    let fg = (2.0 * std::f64::consts::LN_2).sqrt() * sg;
    let gamma0 = if hw > fg { (hw - fg).max(0.2 * hw) } else { 0.2 * hw };
    let a0 = (peak - base) / voigt(0.0, sg, gamma0);
    let span = x[x.len() - 1] - x[0];
    let p0 = [base, a0, x[k], gamma0];
    let model = |p: &[f64], xi: f64| p[0] + p[1] * voigt(xi - p[2], sg, p[3]);
    let res = |p: &[f64]| -> Result<Vec<f64>> { Ok(x.iter().zip(y).map(|(xi, yi)| model(p, *xi) - yi).collect()) };
    let scale = (peak - base).abs();
    let jac = |p: &[f64], _: &[f64]| {
        let hg = 1e-7 * p[3].max(1e-3 * span);
        let mut steps = [1e-7 * scale, 1e-7 * p[1].abs().max(1e-300), 1e-7 * span, hg];
        if p[3] - hg < 0.0 {
            // Forward difference at the gamma = 0 bound.
            let mut q = p.to_vec();
            q[3] += hg;
            let r0 = res(p)?;
            let r1 = res(&q)?;
            steps[3] = 0.0;
            let mut m = numeric_jacobian(&p[..3], &steps[..3], |s: &[f64]| res(&[s[0], s[1], s[2], p[3]]))?
                .insert_column(3, 0.0);
            for i in 0..r0.len() {
                m[(i, 3)] = (r1[i] - r0[i]) / hg;
            }
            return Ok(m);
        }
        numeric_jacobian(p, &steps, res)
    };
    let out = minimize(&p0, &[scale, a0.abs(), span, span], res, jac, |p| p[3] = p[3].max(0.0), &lm_small())?;
    let p = out.params.clone();
    let cov = covariance(&out.jacobian, out.chi2);
    let gamma_sigma = cov.as_ref().map_or(f64::NAN, |c| c[(3, 3)].max(0.0).sqrt());
    if p[3] <= 0.0 || p[3] <= 2.0 * gamma_sigma {
        return Err(Error::FitDegenerate(format!(
            "Lorentzian HWHM {:.3e} is consistent with zero (sigma {:.3e})",
            p[3], gamma_sigma
        )));
    }
    Ok(VoigtDeconvolution {
        hwhm_total: voigt_hwhm(sg, p[3]),
        hwhm_lorentz: 2.0 * p[3],
        hwhm_lorentz_sigma: 2.0 * gamma_sigma,
        sigma_gauss: sg,
        center: p[2],
        amplitude: p[1],
        offset: p[0],
    })
}
