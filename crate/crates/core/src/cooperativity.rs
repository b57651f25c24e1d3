//! Cooperativity enhancement `C_mm / C` for point particles and Gaussian
//! clouds, with closed forms in terms of the Lerch transcendent and the
//! Appell function, and the effective mode number of a square cutoff.

use crate::cavity_model::{CavityKind, CloudParams, KernelParams};
use crate::error::{invalid, Error, Result};
use crate::greens::{greens_cloud, greens_point};
use crate::quadrature::QuadratureSpec;
use crate::special::appell_f1_half;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use crate::special::lerch;

/// Single-atom, single-mode cooperativity of the reference cavity.
pub const C_SINGLE: f64 = 5.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnhancementMethod {
    Quadrature,
    LerchClosedForm,
    AppellClosedForm,
}

/// Enhancement evaluated by quadrature of the Green's function and by the
/// matching closed form. `ratio` is the closed-form value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnhancementResult {
    pub ratio: f64,
    pub c_mm: f64,
    pub method: EnhancementMethod,
    pub c_single: f64,
    pub quadrature: f64,
    pub closed_form: f64,
}

impl EnhancementResult {
    fn new(quadrature: f64, closed_form: f64, method: EnhancementMethod) -> Self {
        Self {
            ratio: closed_form,
            c_mm: closed_form * C_SINGLE,
            method,
            c_single: C_SINGLE,
            quadrature,
            closed_form,
        }
    }

    /// Relative disagreement between the two evaluation paths.
    pub fn path_mismatch(&self) -> f64 {
        (self.quadrature - self.closed_form).abs() / self.closed_form.abs()
    }
}

fn single_mode_cloud(kp: &KernelParams, cloud: &CloudParams) -> f64 {
    let g = |s: f64| 1.0 / (1.0 + 2.0 * s * s / (kp.w0 * kp.w0));
    let i00 = g(cloud.sigma_x).sqrt() * g(cloud.sigma_y).sqrt();
    (Complex64::new(i00 * i00, 0.0) / Complex64::new(1.0, kp.kappa_t)).re
}

/// Point-particle enhancement `Re D(0, 0)` and
/// `Re[(1/4 eps_t) Phi(exp(-4 alpha), 1, u/4)]`.
pub fn enhancement_point(kp: &KernelParams, spec: &QuadratureSpec) -> Result<EnhancementResult> {
    kp.validate()?;
    if kp.kind == CavityKind::SingleMode {
        let v = (Complex64::new(1.0, kp.kappa_t).inv()).re;
        return Ok(EnhancementResult::new(v, v, EnhancementMethod::LerchClosedForm));
    }
    if kp.alpha <= 0.0 {
        return Err(Error::DivergentIntegral("point-particle enhancement requires alpha > 0".into()));
    }
    let quad = greens_point([0.0, 0.0], [0.0, 0.0], kp, spec)?.value.re;
    let closed = (lerch(Complex64::new((-4.0 * kp.alpha).exp(), 0.0), kp.u() / 4.0)? / (4.0 * kp.eps_t)).re;
    Ok(EnhancementResult::new(quad, closed, EnhancementMethod::LerchClosedForm))
}

/// Isotropic cloud: `Re[(1+g)^2/(16 eps_t) Phi(g^4 exp(-4 alpha), 1, u/4)]`.
pub fn enhancement_cloud_iso(kp: &KernelParams, cloud: &CloudParams, spec: &QuadratureSpec) -> Result<EnhancementResult> {
    kp.validate()?;
    cloud.validate()?;
    if (cloud.sigma_x - cloud.sigma_y).abs() > 1e-12 * cloud.sigma_x.max(cloud.sigma_y) {
        return invalid("isotropic enhancement requires sigma_x = sigma_y");
    }
    if kp.kind == CavityKind::SingleMode {
        let v = single_mode_cloud(kp, cloud);
        return Ok(EnhancementResult::new(v, v, EnhancementMethod::LerchClosedForm));
    }
    let g = cloud.gamma_x(kp.w0);
    let quad = greens_cloud([0.0, 0.0], [0.0, 0.0], cloud, kp, spec)?.value.re;
    let z = g.powi(4) * (-4.0 * kp.alpha).exp();
    let closed = ((1.0 + g).powi(2) / (16.0 * kp.eps_t) * lerch(Complex64::new(z, 0.0), kp.u() / 4.0)?).re;
    Ok(EnhancementResult::new(quad, closed, EnhancementMethod::LerchClosedForm))
}

/// Anisotropic cloud via `F1(u/2; 1/2, 1/2; u/2 + 1; +-X, +-Y)` with
/// `X = g_x^2 exp(-2 alpha)`, `Y = g_y^2 exp(-2 alpha)`.
pub fn enhancement_cloud_aniso(kp: &KernelParams, cloud: &CloudParams, spec: &QuadratureSpec) -> Result<EnhancementResult> {
    kp.validate()?;
    cloud.validate()?;
    if kp.kind == CavityKind::SingleMode {
        let v = single_mode_cloud(kp, cloud);
        return Ok(EnhancementResult::new(v, v, EnhancementMethod::AppellClosedForm));
    }
    let (gx, gy) = (cloud.gamma_x(kp.w0), cloud.gamma_y(kp.w0));
    let quad = greens_cloud([0.0, 0.0], [0.0, 0.0], cloud, kp, spec)?.value.re;
    let closed = aniso_closed_form(kp, gx, gy)?;
    Ok(EnhancementResult::new(quad, closed, EnhancementMethod::AppellClosedForm))
}

fn aniso_closed_form(kp: &KernelParams, gx: f64, gy: f64) -> Result<f64> {
    let u = kp.u();
    let a = u / 2.0;
    let e = (-2.0 * kp.alpha).exp();
    let (x, y) = (gx * gx * e, gy * gy * e);
    let f = appell_f1_half(a, x, y)? + appell_f1_half(a, -x, -y)?;
    Ok(((1.0 + gx) * (1.0 + gy) / (8.0 * kp.eps_t) * f / u).re)
}

/// Picks the point, isotropic or anisotropic path.
pub fn enhancement(kp: &KernelParams, cloud: Option<&CloudParams>, spec: &QuadratureSpec) -> Result<EnhancementResult> {
    match cloud {
        None => enhancement_point(kp, spec),
        Some(c) if (c.sigma_x - c.sigma_y).abs() <= 1e-12 * c.sigma_x.max(c.sigma_y) => enhancement_cloud_iso(kp, c, spec),
        Some(c) => enhancement_cloud_aniso(kp, c, spec),
    }
}

/// `Xi_l(0)^2` for the scaled Hermite functions: `C(l, l/2) / 2^l` for even
/// `l`, zero for odd.
fn center_sq(l_max: usize) -> Vec<f64> {
    let mut c = vec![0.0; l_max + 1];
    c[0] = 1.0;
    for l in (2..=l_max).step_by(2) {
        c[l] = c[l - 2] * (l as f64 - 1.0) / l as f64;
    }
    c
}

/// Exact square-cutoff sum and its large-M asymptote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareCutoff {
    pub m: usize,
    pub exact: f64,
    pub asymptote: f64,
}

/// `sum_{l,m <= M} Xi_{l,m}(0)^2 W_{l,m}` with `W = 1` for `l + m = 0 mod 4`.
pub fn square_cutoff_enhancement(m: usize) -> Result<SquareCutoff> {
    if m % 2 != 0 || m > 200 {
        return invalid("square cutoff M must be even and at most 200");
    }
    Ok(SquareCutoff { m, exact: square_cutoff_sum(m), asymptote: square_cutoff_asymptote(m) })
}

fn square_cutoff_sum(m: usize) -> f64 {
    let c = center_sq(m);
    let mut s = 0.0;
    for l in (0..=m).step_by(2) {
        for k in (0..=m).step_by(2) {
            if (l + k) % 4 == 0 {
                s += c[l] * c[k];
            }
        }
    }
    s
}

/// `M/pi + 2/pi + sqrt(2)`.
pub fn square_cutoff_asymptote(m: usize) -> f64 {
    let pi = std::f64::consts::PI;
    m as f64 / pi + 2.0 / pi + std::f64::consts::SQRT_2
}

/// Large-M expansion of the exact sum, `M/pi + 3/(2 pi) + 1/4 + O(M^-1/2)`.
///
/// With `c_j = C(2j, j)/4^j` the sum is `((sum c_j)^2 + (sum (-1)^j c_j)^2)/2`
/// over `j <= M/2`. The first sum is `(M+1) c_{M/2}`; the alternating one
/// tends to `1/sqrt2` with an `O(M^-1/2)` remainder. The constant differs
/// from the one in [`square_cutoff_asymptote`] by about 1.32.
pub fn square_cutoff_expansion(m: usize) -> f64 {
    let pi = std::f64::consts::PI;
    m as f64 / pi + 1.5 / pi + 0.25
}

/// Factorial form with the terminating `2F1(-M/2, 1/2; 3/2; 2)`; the
/// alternating series loses precision for large M, so it is limited to
/// `M <= 40`.
pub fn square_cutoff_factorial_form(m: usize) -> Result<f64> {
    if m % 2 != 0 || m > 40 {
        return invalid("factorial form requires even M <= 40");
    }
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    let dfact = |n: usize| (1..=n).rev().step_by(2).map(|k| k as f64).product::<f64>();
    let h = m / 2;
    let first = 2f64.powi(-2 * m as i32 - 1) * fact(m + 1).powi(2) / fact(h).powi(4);
    let mut f21 = 0.0;
    let mut term = 1.0;
    for k in 0..=h {
        f21 += term;
        let kf = k as f64;
        term *= (kf - h as f64) * (kf + 0.5) / ((kf + 1.5) * (kf + 1.0)) * 2.0;
    }
    let second = 2f64.powi(-(m as i32) - 1) * dfact(m + 1).powi(2) / fact(h).powi(2) * f21 * f21;
    Ok(first + second)
}

/// Cutoff order and participating mode count needed to reach `c_ratio`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeCount {
    pub m: usize,
    pub modes: usize,
}

/// Smallest even `M` with a square-cutoff enhancement of at least `c_ratio`,
/// and `ceil((M+1)^2/4)` modes.
pub fn effective_mode_count(c_ratio: f64) -> Result<ModeCount> {
    if !(c_ratio >= 1.0) || !c_ratio.is_finite() {
        return invalid("c_ratio must be at least 1");
    }
    // Incremental update: raising M by 2 adds the terms with l or m in {M-1, M}.
    let mut c = vec![1.0];
    let mut s = 1.0;
    let mut m = 0usize;
    while s < c_ratio {
        m += 2;
        let prev = c[m - 2];
        c.push(0.0);
        c.push(prev * (m as f64 - 1.0) / m as f64);
        for k in (0..=m).step_by(2) {
            if (m + k) % 4 == 0 {
                s += if k == m { c[m] * c[m] } else { 2.0 * c[m] * c[k] };
            }
        }
    }
    let modes = ((m + 1) * (m + 1)).div_ceil(4);
    Ok(ModeCount { m, modes })
}
