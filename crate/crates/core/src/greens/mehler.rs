use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::SQRT_2;

/// Default floor on `|1 - t^2|` below which the Mehler kernel is refused.
pub const MEHLER_FLOOR: f64 = 1e-12;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Two-dimensional Mehler kernel `G(r, r', t)` for complex `t`.
pub fn mehler_kernel(r: [f64; 2], rp: [f64; 2], t: Complex64, w0: f64) -> Result<Complex64> {
    mehler_kernel_with_floor(r, rp, t, w0, MEHLER_FLOOR)
}

pub fn mehler_kernel_with_floor(
    r: [f64; 2],
    rp: [f64; 2],
    t: Complex64,
    w0: f64,
    floor: f64,
) -> Result<Complex64> {
    let t2 = t * t;
    let d = c(1.0) - t2;
    if d.norm() < floor {
        return Err(Error::SingularKernel(d.norm()));
    }
    let w2 = w0 * w0;
    let sum_sq = (r[0] * r[0] + r[1] * r[1] + rp[0] * rp[0] + rp[1] * rp[1]) / w2;
    let dot = (r[0] * rp[0] + r[1] * rp[1]) / w2;
    let arg = -(c(1.0) + t2) / d * sum_sq + t * 4.0 / d * dot;
    Ok(arg.exp() / d)
}

/// Average of the Mehler kernel over `t, -t, it, -it` (four direct calls).
pub fn symmetrize(r: [f64; 2], rp: [f64; 2], t: f64, w0: f64) -> Result<Complex64> {
    let mut acc = c(0.0);
    for s in [c(1.0), c(-1.0), Complex64::i(), -Complex64::i()] {
        acc += mehler_kernel(r, rp, s * t, w0)?;
    }
    Ok(acc / 4.0)
}

/// Real closed form of [`symmetrize`] for real `t` in [0, 1).
pub fn symmetrize_fast(r: [f64; 2], rp: [f64; 2], t: f64, w0: f64) -> f64 {
    g_prime_sym(r, rp, [1.0, 1.0], t, w0)
}

#[derive(Clone, Copy)]
struct PairAxis {
    gamma: f64,
    xi: f64,
    xj: f64,
}

fn pair_axes(ri: [f64; 2], rj: [f64; 2], gammas: [f64; 2], w0: f64) -> [PairAxis; 2] {
    let s = SQRT_2 / w0;
    [
        PairAxis { gamma: gammas[0], xi: s * ri[0], xj: s * rj[0] },
        PairAxis { gamma: gammas[1], xi: s * ri[1], xj: s * rj[1] },
    ]
}

/// Gaussian-smeared pair kernel `G'(r_i, r_j, t)` for identical clouds with
/// per-axis factors `gamma`; `gamma = 1` recovers the Mehler kernel.
pub fn g_prime(ri: [f64; 2], rj: [f64; 2], gammas: [f64; 2], t: Complex64, w0: f64) -> Complex64 {
    let t2 = t * t;
    let mut out = c(1.0);
    for ax in pair_axes(ri, rj, gammas, w0) {
        let g = ax.gamma;
        let d = c(1.0) - t2 * (g * g);
        let pref = (1.0 + g) / (2.0 * d.sqrt());
        let quad = (c(1.0) + t2 * g) * (ax.xi * ax.xi + ax.xj * ax.xj) - t * (2.0 * (1.0 + g) * ax.xi * ax.xj);
        out *= pref * (-(1.0 + g) * quad / (4.0 * d)).exp();
    }
    out
}

/// Symmetrized `G'` split into the `+-t` and `+-it` contributions.
pub(crate) fn g_prime_sym_parts(ri: [f64; 2], rj: [f64; 2], gammas: [f64; 2], t: f64, w0: f64) -> (f64, f64) {
    let axes = pair_axes(ri, rj, gammas, w0);
    let t2 = t * t;
    let mut parts = [0.0; 2];
    for (idx, tt) in [t2, -t2].into_iter().enumerate() {
        let mut pref = 1.0;
        let mut q = 0.0;
        let mut l = 0.0;
        for ax in &axes {
            let g = ax.gamma;
            let d = 1.0 - g * g * tt;
            let cc = (1.0 + g) / (4.0 * d);
            pref *= (1.0 + g) / (2.0 * d.sqrt());
            q -= cc * (1.0 + g * tt) * (ax.xi * ax.xi + ax.xj * ax.xj);
            l += 2.0 * cc * (1.0 + g) * ax.xi * ax.xj;
        }
        let lt = l * t;
        parts[idx] = if idx == 0 {
            0.25 * pref * ((q + lt).exp() + (q - lt).exp())
        } else {
            0.5 * pref * q.exp() * lt.cos()
        };
    }
    (parts[0], parts[1])
}

/// Symmetrized smeared pair kernel (real for real `t`).
pub fn g_prime_sym(ri: [f64; 2], rj: [f64; 2], gammas: [f64; 2], t: f64, w0: f64) -> f64 {
    let (a, b) = g_prime_sym_parts(ri, rj, gammas, t, w0);
    a + b
}

#[derive(Clone, Copy)]
struct TripleAxis {
    gamma: f64,
    xi: f64,
    xj: f64,
    xk: f64,
}

fn triple_axes(ri: [f64; 2], rj: [f64; 2], rk: [f64; 2], gammas: [f64; 2], w0: f64) -> [TripleAxis; 2] {
    let s = SQRT_2 / w0;
    [
        TripleAxis { gamma: gammas[0], xi: s * ri[0], xj: s * rj[0], xk: s * rk[0] },
        TripleAxis { gamma: gammas[1], xi: s * ri[1], xj: s * rj[1], xk: s * rk[1] },
    ]
}

/// Per-axis pieces of the dispersive kernel for given `T = t^2`, `T' = t'^2`:
/// prefactor and exponent coefficients of `1, t, t', t t'`.
fn dispersive_axis(ax: &TripleAxis, tt: Complex64, ttp: Complex64) -> (Complex64, [Complex64; 4]) {
    let g = ax.gamma;
    let one = c(1.0);
    let a = c(3.0) - (one + tt + ttp) * g - (tt + ttp + tt * ttp) * (g * g) + tt * ttp * (3.0 * g * g * g);
    let b = |x: Complex64, y: Complex64| c(3.0) + x - (one - x) * (one + y) * g - y * (one + x * 3.0) * (g * g);
    let pref = (1.0 + g).powf(1.5) / (a.sqrt() * 2.0);
    let k = -(1.0 + g) / (a * 4.0);
    let e0 = k * ((one - tt * ttp * (g * g)) * 4.0 * ax.xi * ax.xi
        + b(tt, ttp) * ax.xj * ax.xj
        + b(ttp, tt) * ax.xk * ax.xk);
    let e1 = k * (one - ttp * g) * (-4.0 * (1.0 + g) * ax.xi * ax.xj);
    let e2 = k * (one - tt * g) * (-4.0 * (1.0 + g) * ax.xi * ax.xk);
    let e3 = k * (-4.0 * (1.0 - g * g) * ax.xj * ax.xk);
    (pref, [e0, e1, e2, e3])
}

/// Smeared dispersive kernel `G^D(r_i, r_j, r_k, t, t')` for complex arguments.
pub fn g_dispersive(
    ri: [f64; 2],
    rj: [f64; 2],
    rk: [f64; 2],
    gammas: [f64; 2],
    t: Complex64,
    tp: Complex64,
    w0: f64,
) -> Complex64 {
    let mut out = c(1.0);
    for ax in triple_axes(ri, rj, rk, gammas, w0) {
        let (pref, e) = dispersive_axis(&ax, t * t, tp * tp);
        out *= pref * (e[0] + e[1] * t + e[2] * tp + e[3] * t * tp).exp();
    }
    out
}

/// Average of `G^D` over `t in {+-t, +-it}` and `t' in {+-t', +-it'}`.
pub fn g_dispersive_sym(
    ri: [f64; 2],
    rj: [f64; 2],
    rk: [f64; 2],
    gammas: [f64; 2],
    t: f64,
    tp: f64,
    w0: f64,
) -> f64 {
    let axes = triple_axes(ri, rj, rk, gammas, w0);
    let all_zero = axes.iter().all(|a| a.xi == 0.0 && a.xj == 0.0 && a.xk == 0.0);
    let mut acc = 0.0;
    for t0 in [c(t), Complex64::new(0.0, t)] {
        for tp0 in [c(tp), Complex64::new(0.0, tp)] {
            let (tt, ttp) = (t0 * t0, tp0 * tp0);
            let mut pref = c(1.0);
            let mut e = [c(0.0); 4];
            for ax in &axes {
                let (p, ea) = dispersive_axis(ax, tt, ttp);
                pref *= p;
                for (acc_e, v) in e.iter_mut().zip(ea) {
                    *acc_e += v;
                }
            }
            if all_zero {
                acc += 4.0 * pref.re;
                continue;
            }
            let p = e[1] * t0;
            let q = e[2] * tp0;
            let w = e[3] * t0 * tp0;
            let s = (e[0] + p + q + w).exp() + (e[0] - p - q + w).exp() + (e[0] + p - q - w).exp() + (e[0] - p + q - w).exp();
            acc += (pref * s).re;
        }
    }
    acc / 16.0
}
