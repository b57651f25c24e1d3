//! Forward simulation of a camera image and its inversion by the
//! quadrature-difference relation.

use super::field::FieldMap;
use super::optics::{extract_gaussian_width, field_sigma_from_intensity, greens_width_estimate, transmission_image};
use super::optics::{GaussianWidths, OpticsChain, WidthEstimate};
use super::steady::{effective_waist, steady_state_field};
use crate::cavity_model::CavityParams;
use crate::error::{invalid, Result};
use crate::greens::greens_point;
use crate::quadrature::QuadratureSpec;
use serde::{Deserialize, Serialize};

/// HWHM of `|D(r, 0)|` along x, by bisection on the kernel.
pub fn kernel_hwhm(cavity: &CavityParams) -> Result<f64> {
    let kp = cavity.kernel()?;
    let spec = QuadratureSpec::kernel();
    let d = |r: f64| greens_point([r, 0.0], [0.0, 0.0], &kp, &spec).map(|s| s.value.norm());
    let half = 0.5 * d(0.0)?;
    let (mut lo, mut hi) = (0.0, cavity.w0 / 64.0);
    while d(hi)? > half {
        lo = hi;
        hi *= 2.0;
        if hi > 8.0 * cavity.w0 {
            return invalid("kernel has no half-maximum within 8 w0");
        }
    }
    while hi - lo > 1e-9 * hi {
        let m = 0.5 * (lo + hi);
        if d(m)? > half {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of one forward-and-invert cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub truth_hwhm: f64,
    pub camera: GaussianWidths,
    pub estimate: WidthEstimate,
    pub grid_points: usize,
}

impl RoundTrip {
    pub fn relative_error(&self) -> f64 {
        self.estimate.hwhm / self.truth_hwhm - 1.0
    }
}

/// Grid for a centered pump of waist `pump_waist`: spacing below a quarter
/// of the effective waist, the kernel HWHM and the pump waist; extent five
/// kernel HWHMs or four pump waists, whichever is larger.
pub fn imaging_grid(cavity: &CavityParams, pump_waist: f64, kernel_hwhm: f64) -> (usize, f64) {
    let half = (5.0 * kernel_hwhm).max(4.0 * pump_waist);
    let dx = (effective_waist(cavity) / 4.0).min(kernel_hwhm / 4.0).min(pump_waist / 4.0);
    let n = ((2.0 * half / dx).ceil() as usize + 1) | 1;
    (n, half)
}

/// Simulate the camera image of a centered Gaussian pump, fit it and
/// invert for the kernel width (pump field width `w_p / sqrt 2`).
pub fn imaging_round_trip(
    cavity: &CavityParams,
    pump_waist: f64,
    chain: &OpticsChain,
    spec: &QuadratureSpec,
) -> Result<RoundTrip> {
    if !(pump_waist > 0.0) {
        return invalid("pump waist must be positive");
    }
    let truth_hwhm = kernel_hwhm(cavity)?;
    let (n, half) = imaging_grid(cavity, pump_waist, truth_hwhm);
    let pump = FieldMap::gaussian_pump(n, half, pump_waist, [0.0, 0.0]);
    let phi = steady_state_field(&pump, cavity, spec)?;
    let image = transmission_image(&phi, chain)?;
    let camera = extract_gaussian_width(&image)?;
    let sigma_ccd = field_sigma_from_intensity(camera.sigma_major);
    let estimate = greens_width_estimate(sigma_ccd, chain.psf_sigma, pump_waist / std::f64::consts::SQRT_2, chain.magnification)?;
    Ok(RoundTrip { truth_hwhm, camera, estimate, grid_points: n })
}

/// A cavity whose kernel is set by the mode cutoff: `alpha` chosen so the
/// `t = exp(-alpha)` Mehler kernel has the requested HWHM, and dispersion
/// reduced to `eps_t = alpha / 20` so the tau average barely reshapes it.
/// The kernel is then close to Gaussian.
pub fn cutoff_limited_cavity(base: &CavityParams, hwhm: f64) -> Result<CavityParams> {
    let x = (hwhm / base.w0).powi(2) / std::f64::consts::LN_2;
    if !(x > 0.0 && x < 1.0) {
        return invalid(format!("HWHM {hwhm} um not reachable with w0 = {}", base.w0));
    }
    let mut cav = *base;
    cav.alpha = x.atanh();
    cav.epsilon = cav.alpha / 20.0 * cav.effective_detuning().abs();
    Ok(cav)
}
