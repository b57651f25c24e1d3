//! Post-cavity optics, 2-D Gaussian width fits and the quadrature-difference
//! width relation.

use super::field::FieldMap;
use crate::error::{invalid, Error, Result};
use crate::fitting::lm::{minimize, numeric_jacobian, LmOptions};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Magnification onto the camera and a Gaussian point-spread function
/// acting on the field (camera-plane units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticsChain {
    pub magnification: f64,
    pub psf_sigma: f64,
}

impl OpticsChain {
    pub fn identity() -> Self {
        Self { magnification: 1.0, psf_sigma: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.magnification > 0.0 && self.magnification.is_finite()) {
            return invalid("magnification must be positive");
        }
        if !(self.psf_sigma >= 0.0 && self.psf_sigma.is_finite()) {
            return invalid("psf_sigma must be non-negative");
        }
        Ok(())
    }
}

fn gaussian_taps(sigma: f64, h: f64) -> Vec<f64> {
    let half = ((5.0 * sigma / h).ceil() as usize).max(1);
    let mut taps: Vec<f64> = (0..=2 * half)
        .map(|k| {
            let x = (k as f64 - half as f64) * h;
            (-0.5 * x * x / (sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    taps
}

fn convolve_axis(data: &[Complex64], n: usize, stride: usize, count: usize, count_stride: usize, taps: &[f64]) -> Vec<Complex64> {
    let half = taps.len() / 2;
    let mut out = data.to_vec();
    for c in 0..count {
        let base = c * count_stride;
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &w) in taps.iter().enumerate() {
                let src = i as isize + k as isize - half as isize;
                if src >= 0 && (src as usize) < n {
                    acc += data[base + src as usize * stride] * w;
                }
            }
            out[base + i * stride] = acc;
        }
    }
    out
}

/// Convolve a field with a normalized separable Gaussian of width `sigma`.
pub fn gaussian_blur(field: &FieldMap, sigma: f64) -> FieldMap {
    if sigma <= 0.0 {
        return field.clone();
    }
    let mut out = field.clone();
    let tx = gaussian_taps(sigma, field.dx);
    out.data = convolve_axis(&out.data, field.nx, 1, field.ny, field.nx, &tx);
    let ty = gaussian_taps(sigma, field.dy);
    out.data = convolve_axis(&out.data, field.ny, field.nx, field.nx, 1, &ty);
    out
}

/// Camera intensity: rescale coordinates by `m`, blur the field with the
/// PSF, then take `|.|^2`.
pub fn transmission_image(field: &FieldMap, chain: &OpticsChain) -> Result<FieldMap> {
    chain.validate()?;
    field.validate()?;
    let m = chain.magnification;
    let mut scaled = field.clone();
    scaled.x_min *= m;
    scaled.y_min *= m;
    scaled.dx *= m;
    scaled.dy *= m;
    Ok(gaussian_blur(&scaled, chain.psf_sigma).intensity())
}

/// Principal-axis widths of a 2-D Gaussian fit; `angle` (radians) is the
/// direction of the major axis, in (-pi/2, pi/2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianWidths {
    pub sigma_major: f64,
    pub sigma_minor: f64,
    pub angle: f64,
    pub center: [f64; 2],
    pub amplitude: f64,
    pub offset: f64,
}

fn gauss2d(p: &[f64], x: f64, y: f64) -> f64 {
    let (c, s) = (p[5].cos(), p[5].sin());
    let (dx, dy) = (x - p[1], y - p[2]);
    let u = c * dx + s * dy;
    let v = -s * dx + c * dy;
    p[0] * (-0.5 * (u * u / (p[3] * p[3]) + v * v / (p[4] * p[4]))).exp() + p[6]
}

fn wrap_angle(mut a: f64) -> f64 {
    use std::f64::consts::PI;
    while a > PI / 2.0 {
        a -= PI;
    }
    while a <= -PI / 2.0 {
        a += PI;
    }
    a
}

/// Nonlinear least-squares fit of `A exp(-u^2/2s1^2 - v^2/2s2^2) + c` to a
/// real intensity map, started from image moments.
pub fn extract_gaussian_width(intensity: &FieldMap) -> Result<GaussianWidths> {
    intensity.validate()?;
    let vals: Vec<f64> = intensity.data.iter().map(|v| v.re).collect();
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::FitDegenerate("flat image".into()));
    }
    let (mut w, mut mx, mut my) = (0.0, 0.0, 0.0);
    for j in 0..intensity.ny {
        for i in 0..intensity.nx {
            let v = vals[j * intensity.nx + i] - lo;
            w += v;
            mx += v * intensity.x(i);
            my += v * intensity.y(j);
        }
    }
    mx /= w;
    my /= w;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for j in 0..intensity.ny {
        for i in 0..intensity.nx {
            let v = vals[j * intensity.nx + i] - lo;
            let (dx, dy) = (intensity.x(i) - mx, intensity.y(j) - my);
            sxx += v * dx * dx;
            syy += v * dy * dy;
            sxy += v * dx * dy;
        }
    }
    let (sxx, syy, sxy) = (sxx / w, syy / w, sxy / w);
    let tr = 0.5 * (sxx + syy);
    let det = (0.25 * (sxx - syy).powi(2) + sxy * sxy).sqrt();
    let theta0 = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let p0 = [hi - lo, mx, my, (tr + det).max(1e-12).sqrt(), (tr - det).max(1e-12).sqrt(), theta0, lo];
    let hmin = intensity.dx.min(intensity.dy);
    let scales = [hi - lo, hmin, hmin, hmin, hmin, 1.0, hi - lo];
    let residual = |p: &[f64]| -> Result<Vec<f64>> {
        if !(p[3] > 0.0 && p[4] > 0.0) {
            return Err(Error::FitDegenerate("non-positive width".into()));
        }
        let mut r = Vec::with_capacity(vals.len());
        for j in 0..intensity.ny {
            for i in 0..intensity.nx {
                r.push((gauss2d(p, intensity.x(i), intensity.y(j)) - vals[j * intensity.nx + i]) / (hi - lo));
            }
        }
        Ok(r)
    };
    let steps: Vec<f64> = scales.iter().map(|s| 1e-6 * s).collect();
    let opts = LmOptions { max_iterations: 100, ..LmOptions::default() };
    let out = minimize(
        &p0,
        &scales,
        residual,
        |p, _| numeric_jacobian(p, &steps, residual),
        |p| {
            p[3] = p[3].abs();
            p[4] = p[4].abs();
        },
        &opts,
    )
    .map_err(|e| Error::FitDegenerate(format!("2-D Gaussian fit failed: {e}")))?;
    let p = out.params;
    let ext = intensity.extent();
    let (s1, s2) = (p[3], p[4]);
    if !(s1.is_finite() && s2.is_finite()) || s1.min(s2) < 0.25 * hmin || s1.max(s2) > ext[0].max(ext[1]) || !(p[0] > 0.0) {
        return Err(Error::FitDegenerate(format!("fitted widths ({s1}, {s2}) outside the image scale")));
    }
    let (sigma_major, sigma_minor, angle) = if s1 >= s2 {
        (s1, s2, wrap_angle(p[5]))
    } else {
        (s2, s1, wrap_angle(p[5] + std::f64::consts::FRAC_PI_2))
    };
    Ok(GaussianWidths { sigma_major, sigma_minor, angle, center: [p[1], p[2]], amplitude: p[0], offset: p[6] })
}

/// Kernel width from the quadrature-difference relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub sigma: f64,
    pub hwhm: f64,
}

/// `sigma_D^2 = (sigma_ccd^2 - sigma_psf^2) / m^2 - sigma_pump^2`, all field
/// widths. The HWHM assumes a Gaussian profile.
pub fn greens_width_estimate(sigma_ccd: f64, sigma_psf: f64, sigma_pump: f64, m: f64) -> Result<WidthEstimate> {
    if !(m > 0.0) {
        return invalid("magnification must be positive");
    }
    let rad = (sigma_ccd * sigma_ccd - sigma_psf * sigma_psf) / (m * m) - sigma_pump * sigma_pump;
    if !(rad > 0.0) {
        return Err(Error::NegativeRadicand(rad));
    }
    let sigma = rad.sqrt();
    Ok(WidthEstimate { sigma, hwhm: sigma * (2.0 * std::f64::consts::LN_2).sqrt() })
}

/// Field width of a Gaussian whose intensity has width `sigma_intensity`.
pub fn field_sigma_from_intensity(sigma_intensity: f64) -> f64 {
    sigma_intensity * std::f64::consts::SQRT_2
}
