//! Special functions: the Lerch transcendent `Phi(z, 1, a)`, the Appell
//! function `F1(a; 1/2, 1/2; a + 1; x, y)` and the Faddeeva function.

use crate::error::{Error, Result};
use crate::quadrature::integrate_mapped;
use num_complex::Complex64;
use std::sync::OnceLock;

const SERIES_LIMIT: usize = 10_000_000;
const INTEGRAL_TARGET: f64 = 1e-12;

/// Lerch transcendent `Phi(z, 1, a) = sum_n z^n / (n + a)` for `|z| < 1`,
/// `Re a > 0`. Uses the series for `|z| <= 0.99` and the integral
/// representation beyond.
pub fn lerch(z: Complex64, a: Complex64) -> Result<Complex64> {
    if !(z.norm() < 1.0) || !(a.re > 0.0) {
        return Err(Error::InvalidParameter(format!("lerch requires |z| < 1 and Re a > 0 (z = {z}, a = {a})")));
    }
    if z.norm() <= 0.99 {
        lerch_series(z, a)
    } else {
        lerch_integral(z, a)
    }
}

/// Direct series with a geometric tail bound.
pub fn lerch_series(z: Complex64, a: Complex64) -> Result<Complex64> {
    let r = z.norm();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut zn = Complex64::new(1.0, 0.0);
    for n in 0..SERIES_LIMIT {
        let term = zn / (a + n as f64);
        sum += term;
        let tail = zn.norm() * r / ((n as f64 + 1.0 + a.re).max(1e-300) * (1.0 - r));
        if tail <= 1e-16 * sum.norm() || zn.norm() == 0.0 {
            return Ok(sum);
        }
        zn *= z;
    }
    Err(Error::NotConverged(SERIES_LIMIT))
}

/// `int_0^inf exp(-a y) / (1 - z exp(-y)) dy`, equal to
/// `int_0^1 t^(a-1)/(1 - z t) dt`.
pub fn lerch_integral(z: Complex64, a: Complex64) -> Result<Complex64> {
    let scale = (Complex64::new(1.0, 0.0) - z).norm().clamp(1e-14, 1.0);
    let upper = (1.0 / INTEGRAL_TARGET).ln().max(1.0) * 1.5 / a.re;
    let (v, _) = integrate_mapped(
        |y| (-a * y).exp() / (Complex64::new(1.0, 0.0) - z * (-y).exp()),
        scale,
        upper,
        INTEGRAL_TARGET,
    )?;
    Ok(v)
}

/// `F1(a; 1/2, 1/2; a+1; x, y) = a int_0^1 t^(a-1) (1-xt)^(-1/2) (1-yt)^(-1/2) dt`
/// for real `x, y < 1` and `Re a > 0`.
pub fn appell_f1_half(a: Complex64, x: f64, y: f64) -> Result<Complex64> {
    if !(x < 1.0 && y < 1.0) || !(a.re > 0.0) {
        return Err(Error::InvalidParameter("appell F1 requires x, y < 1 and Re a > 0".into()));
    }
    let scale = (1.0 - x.max(y).max(0.0)).clamp(1e-14, 1.0);
    let upper = (1.0 / INTEGRAL_TARGET).ln() * 1.5 / a.re;
    let (v, _) = integrate_mapped(
        |s| {
            let e = (-s).exp();
            (-a * s).exp() / ((1.0 - x * e) * (1.0 - y * e)).sqrt()
        },
        scale,
        upper,
        INTEGRAL_TARGET,
    )?;
    Ok(a * v)
}

/// Series form of [`appell_f1_half`]: `sum_k a/(a+k) c_k` with `c_k` the
/// Cauchy product of the binomial series of `(1-x)^(-1/2)` and `(1-y)^(-1/2)`.
/// Converges for `|x|, |y| < 1`; slow near 1.
pub fn appell_f1_half_series(a: Complex64, x: f64, y: f64) -> Result<Complex64> {
    let limit = 200_000;
    let mut bx = vec![1.0];
    let mut by = vec![1.0];
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..limit {
        if k > 0 {
            let kf = k as f64;
            bx.push(bx[k - 1] * (kf - 0.5) / kf * x);
            by.push(by[k - 1] * (kf - 0.5) / kf * y);
        }
        let ck: f64 = (0..=k).map(|j| bx[j] * by[k - j]).sum();
        let term = a / (a + k as f64) * ck;
        sum += term;
        let r = x.abs().max(y.abs());
        if k > 10 && term.norm() * (k as f64 + 1.0) / (1.0 - r).max(1e-300) < 1e-15 * sum.norm() {
            return Ok(sum);
        }
    }
    Err(Error::NotConverged(limit))
}

const WEIDEMAN_N: usize = 32;

fn weideman_coefficients() -> &'static (f64, Vec<f64>) {
    static COEF: OnceLock<(f64, Vec<f64>)> = OnceLock::new();
    COEF.get_or_init(|| {
        let n = WEIDEMAN_N;
        let m = 2 * n;
        let m2 = 2 * m;
        let l = (n as f64 / std::f64::consts::SQRT_2).sqrt();
        // f sampled at k = -m+1..m-1, prefixed by a zero, then fftshift-ed.
        let mut f = vec![0.0; m2];
        for j in 1..m2 {
            let k = j as f64 - m as f64;
            let theta = k * std::f64::consts::PI / m as f64;
            let t = l * (theta / 2.0).tan();
            f[j] = (-t * t).exp() * (l * l + t * t);
        }
        let g: Vec<f64> = (0..m2).map(|i| f[(i + m) % m2]).collect();
        let a: Vec<f64> = (1..=n)
            .map(|p| {
                let s: f64 = g
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * (2.0 * std::f64::consts::PI * (i * p) as f64 / m2 as f64).cos())
                    .sum();
                s / m2 as f64
            })
            .collect();
        (l, a)
    })
}

/// Faddeeva function `w(z) = exp(-z^2) erfc(-iz)` for `Im z >= 0`, by
/// Weideman's rational approximation with 32 terms.
pub fn faddeeva(z: Complex64) -> Complex64 {
    let (l, a) = weideman_coefficients();
    let iz = Complex64::i() * z;
    let lm = *l - iz;
    let zz = (*l + iz) / lm;
    let mut p = Complex64::new(0.0, 0.0);
    for c in a.iter().rev() {
        p = p * zz + *c;
    }
    2.0 * p / (lm * lm) + Complex64::new(1.0 / std::f64::consts::PI.sqrt(), 0.0) / lm
}

/// Area-normalized Voigt profile with Gaussian sigma and Lorentzian HWHM.
pub fn voigt(x: f64, sigma: f64, gamma: f64) -> f64 {
    if sigma <= 1e-12 * gamma.max(1e-300) {
        return gamma / (std::f64::consts::PI * (x * x + gamma * gamma));
    }
    if gamma <= 0.0 {
        let z = x / sigma;
        return (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    }
    let z = Complex64::new(x, gamma) / (sigma * std::f64::consts::SQRT_2);
    faddeeva(z).re / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Half width at half maximum of the Voigt profile, by bisection.
pub fn voigt_hwhm(sigma: f64, gamma: f64) -> f64 {
    let peak = voigt(0.0, sigma, gamma);
    let approx = 0.5346 * gamma + (0.2166 * gamma * gamma + 2.0 * std::f64::consts::LN_2 * sigma * sigma).sqrt();
    let (mut lo, mut hi) = (0.0, 4.0 * approx.max(1e-300));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if voigt(mid, sigma, gamma) > 0.5 * peak {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
