use super::mehler::{g_dispersive_sym, g_prime_sym, g_prime_sym_parts, symmetrize_fast};
use super::{KernelMethod, KernelSample};
use crate::cavity_model::{hermite_functions, mode_weight, CavityKind, CloudParams, KernelParams, ModeIndex};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_tau_2d_with, integrate_tau_with, QuadratureSpec, Refinement};
use num_complex::Complex64;

/// `exp(-(1 + i kappa_t) tau)`.
fn tau_weight(kp: &KernelParams, tau: f64) -> Complex64 {
    Complex64::from_polar((-tau).exp(), -kp.kappa_t * tau)
}

fn t_of(kp: &KernelParams, tau: f64) -> f64 {
    (-kp.eps_t * tau - kp.alpha).exp()
}

fn dist2(a: [f64; 2], b: [f64; 2], sign: f64) -> f64 {
    let dx = a[0] - sign * b[0];
    let dy = a[1] - sign * b[1];
    dx * dx + dy * dy
}

/// Squared distance (in w0 units) to the nearer of the local and mirror
/// singular points.
fn min_pair_dist2(a: [f64; 2], b: [f64; 2], w0: f64) -> f64 {
    dist2(a, b, 1.0).min(dist2(a, b, -1.0)) / (w0 * w0)
}

/// Length scale in tau of the sharp part of the integrand near t = exp(-alpha).
fn tau_scale(kp: &KernelParams, alpha_eff: f64, d2: f64) -> f64 {
    (alpha_eff.max(0.5 * d2).max(1e-12) / kp.eps_t).min(1.0)
}

fn alpha_eff(kp: &KernelParams, gammas: [f64; 2]) -> f64 {
    let gmax = gammas[0].abs().max(gammas[1].abs());
    if gmax <= 0.0 {
        f64::INFINITY
    } else {
        kp.alpha - gmax.ln()
    }
}

fn cloud_gammas(cloud: &CloudParams, w0: f64) -> Result<[f64; 2]> {
    cloud.validate()?;
    let g = [cloud.gamma_x(w0), cloud.gamma_y(w0)];
    if g.iter().any(|g| !(g.abs() < 1.0)) {
        return invalid("cloud gamma factors must lie in (-1, 1)");
    }
    Ok(g)
}

/// One-axis Gaussian overlap `int N(x; x0, sigma) exp(-x^2/w0^2) dx`.
fn gauss_i00(x0: f64, sigma: f64, w0: f64) -> f64 {
    let k = 2.0 * sigma * sigma / (w0 * w0);
    (-x0 * x0 / (w0 * w0 + 2.0 * sigma * sigma)).exp() / (1.0 + k).sqrt()
}

/// One-axis Gaussian overlap `int N(x; x0, sigma) exp(-2 x^2/w0^2) dx`.
fn gauss_j00(x0: f64, sigma: f64, w0: f64) -> f64 {
    let k = 4.0 * sigma * sigma / (w0 * w0);
    (-2.0 * x0 * x0 / (w0 * w0 + 4.0 * sigma * sigma)).exp() / (1.0 + k).sqrt()
}

fn single_mode_i00(r: [f64; 2], cloud: &CloudParams, w0: f64) -> f64 {
    gauss_i00(r[0], cloud.sigma_x, w0) * gauss_i00(r[1], cloud.sigma_y, w0)
}

fn single_mode_j00(r: [f64; 2], cloud: &CloudParams, w0: f64) -> f64 {
    gauss_j00(r[0], cloud.sigma_x, w0) * gauss_j00(r[1], cloud.sigma_y, w0)
}

/// Point-source Green's function `D(r, r')` from the tau integral of the
/// symmetrized Mehler kernel.
pub fn greens_point(r: [f64; 2], rp: [f64; 2], kp: &KernelParams, spec: &QuadratureSpec) -> Result<KernelSample> {
    kp.validate()?;
    if kp.kind == CavityKind::SingleMode {
        let w2 = kp.w0 * kp.w0;
        let g0 = (-(r[0] * r[0] + r[1] * r[1] + rp[0] * rp[0] + rp[1] * rp[1]) / w2).exp();
        return Ok(KernelSample {
            value: Complex64::new(g0, 0.0) / Complex64::new(1.0, kp.kappa_t),
            r,
            r_prime: rp,
            method: KernelMethod::ClosedForm,
            rel_err_est: 0.0,
        });
    }
    let d2 = min_pair_dist2(r, rp, kp.w0);
    if kp.alpha == 0.0 && d2 < 1e-18 {
        return Err(Error::DivergentIntegral(
            "alpha = 0 with a point source on its own local or mirror image".into(),
        ));
    }
    let scale = tau_scale(kp, kp.alpha, d2);
    let (value, err) = integrate_tau_with(
        |tau| tau_weight(kp, tau) * symmetrize_fast(r, rp, t_of(kp, tau), kp.w0),
        scale,
        spec,
        Refinement::Adaptive,
    )?;
    Ok(KernelSample { value, r, r_prime: rp, method: KernelMethod::Quadrature, rel_err_est: err })
}

/// Contribution of the `+-it` (nonlocal) symmetrization terms to `D(r, r')`.
pub fn greens_point_nonlocal(
    r: [f64; 2],
    rp: [f64; 2],
    kp: &KernelParams,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    kp.validate()?;
    if kp.kind == CavityKind::SingleMode {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let scale = tau_scale(kp, kp.alpha.max(1e-12), min_pair_dist2(r, rp, kp.w0));
    let (v, _) = integrate_tau_with(
        |tau| tau_weight(kp, tau) * g_prime_sym_parts(r, rp, [1.0, 1.0], t_of(kp, tau), kp.w0).1,
        scale,
        spec,
        Refinement::Adaptive,
    )?;
    Ok(v)
}

/// Direct weighted double sum over `l + m <= n_max`.
pub fn mode_sum_oracle(r: [f64; 2], rp: [f64; 2], kp: &KernelParams, n_max: usize) -> Complex64 {
    let hx = hermite_functions(n_max, r[0], kp.w0);
    let hy = hermite_functions(n_max, r[1], kp.w0);
    let hxp = hermite_functions(n_max, rp[0], kp.w0);
    let hyp = hermite_functions(n_max, rp[1], kp.w0);
    let mut acc = Complex64::new(0.0, 0.0);
    for n in (0..=n_max).step_by(2) {
        let w = mode_weight(ModeIndex::new(0, n), kp);
        if w == Complex64::new(0.0, 0.0) {
            continue;
        }
        let shell: f64 = (0..=n).map(|l| hx[l] * hxp[l] * hy[n - l] * hyp[n - l]).sum();
        acc += w * shell;
    }
    acc
}

/// Cloud-smeared interaction `int int rho_i rho_j D` for two identical
/// Gaussian clouds centered at `ri` and `rj`.
pub fn greens_cloud(
    ri: [f64; 2],
    rj: [f64; 2],
    cloud: &CloudParams,
    kp: &KernelParams,
    spec: &QuadratureSpec,
) -> Result<KernelSample> {
    greens_cloud_with(ri, rj, cloud, kp, spec, Refinement::Adaptive)
}

pub fn greens_cloud_with(
    ri: [f64; 2],
    rj: [f64; 2],
    cloud: &CloudParams,
    kp: &KernelParams,
    spec: &QuadratureSpec,
    refinement: Refinement,
) -> Result<KernelSample> {
    kp.validate()?;
    let gammas = cloud_gammas(cloud, kp.w0)?;
    if kp.kind == CavityKind::SingleMode {
        let v = single_mode_i00(ri, cloud, kp.w0) * single_mode_i00(rj, cloud, kp.w0);
        return Ok(KernelSample {
            value: Complex64::new(v, 0.0) / Complex64::new(1.0, kp.kappa_t),
            r: ri,
            r_prime: rj,
            method: KernelMethod::ClosedForm,
            rel_err_est: 0.0,
        });
    }
    let scale = tau_scale(kp, alpha_eff(kp, gammas), min_pair_dist2(ri, rj, kp.w0));
    let (value, err) = integrate_tau_with(
        |tau| tau_weight(kp, tau) * g_prime_sym(ri, rj, gammas, t_of(kp, tau), kp.w0),
        scale,
        spec,
        refinement,
    )?;
    Ok(KernelSample { value, r: ri, r_prime: rj, method: KernelMethod::Quadrature, rel_err_est: err })
}

/// Triple-density double-kernel integral
/// `int rho_i rho_j rho_k D(r, r') D(r, r'')` with `r` in cloud `i`.
pub fn greens_dispersive(
    ri: [f64; 2],
    rj: [f64; 2],
    rk: [f64; 2],
    cloud: &CloudParams,
    kp: &KernelParams,
    spec: &QuadratureSpec,
) -> Result<KernelSample> {
    greens_dispersive_with(ri, rj, rk, cloud, kp, spec, Refinement::Adaptive)
}

pub fn greens_dispersive_with(
    ri: [f64; 2],
    rj: [f64; 2],
    rk: [f64; 2],
    cloud: &CloudParams,
    kp: &KernelParams,
    spec: &QuadratureSpec,
    refinement: Refinement,
) -> Result<KernelSample> {
    kp.validate()?;
    let gammas = cloud_gammas(cloud, kp.w0)?;
    if kp.kind == CavityKind::SingleMode {
        let v = single_mode_j00(ri, cloud, kp.w0)
            * single_mode_i00(rj, cloud, kp.w0)
            * single_mode_i00(rk, cloud, kp.w0);
        let d = Complex64::new(1.0, kp.kappa_t);
        return Ok(KernelSample {
            value: Complex64::new(v, 0.0) / (d * d),
            r: ri,
            r_prime: rj,
            method: KernelMethod::ClosedForm,
            rel_err_est: 0.0,
        });
    }
    let d2 = min_pair_dist2(ri, rj, kp.w0).min(min_pair_dist2(ri, rk, kp.w0));
    let scale = tau_scale(kp, alpha_eff(kp, gammas), d2);
    let symmetric = rj == rk;
    let (value, err) = integrate_tau_2d_with(
        |a, b| {
            tau_weight(kp, a) * tau_weight(kp, b) * g_dispersive_sym(ri, rj, rk, gammas, t_of(kp, a), t_of(kp, b), kp.w0)
        },
        scale,
        spec,
        symmetric,
        refinement,
    )?;
    Ok(KernelSample { value, r: ri, r_prime: rj, method: KernelMethod::Quadrature, rel_err_est: err })
}
