//! Gauss-Legendre rules and the mapped semi-infinite rule used for the
//! kernel integrals over the mode-weight variable tau.
//!
//! The integrals have the form `int_0^inf f(tau) exp(-tau) dtau`, where `f`
//! varies on the scale `s = alpha / eps_t` near `tau = 0` (the t = exp(-alpha)
//! end) and smoothly elsewhere. The map `tau = s (exp(v) - 1)` with uniform
//! panels in `v` produces a geometrically refined grid toward `tau = 0`.

use crate::error::{invalid, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

const MAX_CACHED_ORDER: usize = 64;

/// Controls the panelled quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Minimum number of panels on the coarsest level.
    pub panels: usize,
    /// Largest ratio between consecutive panel endpoints of the geometric grid.
    pub refinement_ratio: f64,
    /// Relative error target, estimated by panel doubling.
    pub target_rel_err: f64,
    /// Gauss-Legendre nodes per panel.
    #[serde(default = "default_order")]
    pub order: usize,
    /// Maximum number of panel doublings before giving up.
    #[serde(default = "default_doublings")]
    pub max_doublings: u32,
}

fn default_order() -> usize {
    8
}

fn default_doublings() -> u32 {
    6
}

impl QuadratureSpec {
    /// Default for single kernel integrals (relative error 1e-8).
    pub fn kernel() -> Self {
        Self {
            panels: 8,
            refinement_ratio: 2.0,
            target_rel_err: 1e-8,
            order: 8,
            max_doublings: 6,
        }
    }

    /// Default for the double (t, t') integrals (relative error 1e-6).
    pub fn double() -> Self {
        Self {
            panels: 4,
            refinement_ratio: 4.0,
            target_rel_err: 1e-6,
            order: 8,
            max_doublings: 4,
        }
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target_rel_err = target;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.panels < 4 {
            return invalid(format!("quadrature panels must be >= 4, got {}", self.panels));
        }
        if !(self.refinement_ratio > 1.0) {
            return invalid("refinement_ratio must exceed 1");
        }
        if !(self.target_rel_err > 0.0 && self.target_rel_err <= 1e-3) {
            return invalid("target_rel_err must lie in (0, 1e-3]");
        }
        if self.order == 0 || self.order > MAX_CACHED_ORDER {
            return invalid(format!("order must lie in 1..={MAX_CACHED_ORDER}"));
        }
        Ok(())
    }

    /// Upper truncation of tau; the weight exp(-tau) is below target there.
    pub fn tau_max(&self) -> f64 {
        (1.0 / self.target_rel_err).ln() + 10.0
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::kernel()
    }
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        (0..=MAX_CACHED_ORDER)
            .map(|k| if k == 0 { (vec![], vec![]) } else { compute_gauss_legendre(k) })
            .collect()
    });
    assert!(n >= 1 && n <= MAX_CACHED_ORDER, "unsupported Gauss-Legendre order {n}");
    &cache[n]
}

/// A fixed rule for `int_0^tau_max f(tau) dtau`.
#[derive(Debug, Clone, PartialEq)]
pub struct TauRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TauRule {
    /// Uniform panels in `v` for `tau = scale * (exp(v) - 1)`.
    pub fn mapped(scale: f64, tau_max: f64, panels: usize, order: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let vmax = (1.0 + tau_max / scale).ln();
        let h = vmax / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (x, w) in gx.iter().zip(gw) {
                let v = mid + 0.5 * h * x;
                let ev = v.exp();
                nodes.push(scale * (ev - 1.0));
                weights.push(0.5 * h * w * scale * ev);
            }
        }
        Self { nodes, weights }
    }

    /// The rule at refinement `level` (panel count doubled `level` times).
    pub fn for_spec(scale: f64, spec: &QuadratureSpec, level: u32) -> Self {
        let tau_max = spec.tau_max();
        let vmax = (1.0 + tau_max / scale).ln();
        let base = spec.panels.max((vmax / spec.refinement_ratio.ln()).ceil() as usize);
        Self::mapped(scale, tau_max, base << level, spec.order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn rel_change(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Integrate `f(tau)` over [0, inf) with panel doubling until the relative
/// change drops below the target. Returns the value and the error estimate.
pub fn integrate_tau<F>(f: F, scale: f64, spec: &QuadratureSpec) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Complex64,
{
    spec.validate()?;
    let eval = |level: u32| {
        let rule = TauRule::for_spec(scale, spec, level);
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w)| f(t) * w)
            .sum::<Complex64>()
    };
    refine(eval, spec)
}

/// Integrate `f(tau, lambda)` over the positive quadrant with a product rule.
/// When `symmetric` is set, `f(a, b) == f(b, a)` is assumed and only half
/// the grid is evaluated.
pub fn integrate_tau_2d<F>(
    f: F,
    scale: f64,
    spec: &QuadratureSpec,
    symmetric: bool,
) -> Result<(Complex64, f64)>
where
    F: Fn(f64, f64) -> Complex64,
{
    spec.validate()?;
    let eval = |level: u32| sum_2d(&f, &TauRule::for_spec(scale, spec, level), symmetric);
    refine(eval, spec)
}

fn refine<E>(eval: E, spec: &QuadratureSpec) -> Result<(Complex64, f64)>
where
    E: Fn(u32) -> Complex64,
{
    let mut prev = eval(0);
    let mut err = f64::INFINITY;
    for level in 1..=spec.max_doublings {
        let cur = eval(level);
        err = rel_change(prev, cur);
        prev = cur;
        if err <= spec.target_rel_err {
            return Ok((cur, err));
        }
    }
    if !prev.re.is_finite() || !prev.im.is_finite() {
        return Err(Error::QuadratureNotConverged { estimate: f64::INFINITY, target: spec.target_rel_err });
    }
    Err(Error::QuadratureNotConverged { estimate: err, target: spec.target_rel_err })
}

/// Integrate `f(y)` over [0, upper] on the map `y = scale (exp(v) - 1)`,
/// doubling the panel count until the relative change is below `target`.
pub fn integrate_mapped<F>(f: F, scale: f64, upper: f64, target: f64) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Complex64,
{
    let vmax = (1.0 + upper / scale).ln();
    let base = 4usize.max((vmax / std::f64::consts::LN_2).ceil() as usize);
    let eval = |level: u32| {
        let rule = TauRule::mapped(scale, upper, base << level, 10);
        rule.nodes.iter().zip(&rule.weights).map(|(&y, &w)| f(y) * w).sum::<Complex64>()
    };
    let mut prev = eval(0);
    let mut err = f64::INFINITY;
    for level in 1..=8 {
        let cur = eval(level);
        err = rel_change(prev, cur);
        prev = cur;
        if err <= target {
            return Ok((cur, err));
        }
    }
    Err(Error::QuadratureNotConverged { estimate: err, target })
}

/// Whether a kernel integral refines adaptively or uses a fixed rule.
///
/// A fixed rule (exactly `spec.panels` panels, no doubling) makes the result
/// a smooth function of the kernel parameters, which finite-difference
/// Jacobians need.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Refinement {
    #[default]
    Adaptive,
    Fixed,
}

/// One-dimensional tau integral with the chosen refinement.
pub fn integrate_tau_with<F>(
    f: F,
    scale: f64,
    spec: &QuadratureSpec,
    refinement: Refinement,
) -> Result<(Complex64, f64)>
where
    F: Fn(f64) -> Complex64,
{
    match refinement {
        Refinement::Adaptive => integrate_tau(f, scale, spec),
        Refinement::Fixed => {
            spec.validate()?;
            let rule = TauRule::mapped(scale, spec.tau_max(), spec.panels, spec.order);
            let v = rule.nodes.iter().zip(&rule.weights).map(|(&t, &w)| f(t) * w).sum();
            Ok((v, f64::NAN))
        }
    }
}

/// Two-dimensional tau integral with the chosen refinement.
pub fn integrate_tau_2d_with<F>(
    f: F,
    scale: f64,
    spec: &QuadratureSpec,
    symmetric: bool,
    refinement: Refinement,
) -> Result<(Complex64, f64)>
where
    F: Fn(f64, f64) -> Complex64,
{
    match refinement {
        Refinement::Adaptive => integrate_tau_2d(f, scale, spec, symmetric),
        Refinement::Fixed => {
            spec.validate()?;
            let rule = TauRule::mapped(scale, spec.tau_max(), spec.panels, spec.order);
            Ok((sum_2d(&f, &rule, symmetric), f64::NAN))
        }
    }
}

fn sum_2d<F>(f: &F, rule: &TauRule, symmetric: bool) -> Complex64
where
    F: Fn(f64, f64) -> Complex64,
{
    let n = rule.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let (ti, wi) = (rule.nodes[i], rule.weights[i]);
        if symmetric {
            acc += f(ti, ti) * (wi * wi);
            for j in 0..i {
                acc += f(ti, rule.nodes[j]) * (2.0 * wi * rule.weights[j]);
            }
        } else {
            for j in 0..n {
                acc += f(ti, rule.nodes[j]) * (wi * rule.weights[j]);
            }
        }
    }
    acc
}

/// Composite Gauss-Legendre integral of a real function on [a, b], doubling
/// the panel count until the relative change is below `tol`.
pub fn integrate_interval<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (gx, gw) = gauss_legendre(10);
    let eval = |panels: usize| {
        let h = (b - a) / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (x, w) in gx.iter().zip(gw) {
                acc += w * f(mid + 0.5 * h * x);
            }
        }
        0.5 * h * acc
    };
    let mut panels = 8;
    let mut prev = eval(panels);
    let mut scale = prev.abs();
    for _ in 0..12 {
        panels *= 2;
        let cur = eval(panels);
        scale = scale.max(cur.abs());
        if (cur - prev).abs() <= tol * scale.max(f64::MIN_POSITIVE) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged { estimate: f64::NAN, target: tol })
}
