use crate::cavity_model::{hermite_functions, CloudParams, ModeIndex};
use crate::quadrature::{gauss_legendre, integrate_interval};
use std::f64::consts::PI;

const OVERLAP_TOL: f64 = 1e-12;

fn gaussian(x: f64, x0: f64, sigma: f64) -> f64 {
    let z = (x - x0) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

/// One-axis integral of the Gaussian density against `f(x)`, over a window
/// covering the density and the mode support.
fn axis_integral<F: Fn(f64) -> f64>(f: F, x0: f64, sigma: f64) -> f64 {
    let (a, b) = (x0 - 12.0 * sigma, x0 + 12.0 * sigma);
    integrate_interval(|x| gaussian(x, x0, sigma) * f(x), a, b, OVERLAP_TOL).unwrap_or_else(|_| {
        let n = 20_000;
        let h = (b - a) / n as f64;
        (0..=n)
            .map(|k| {
                let x = a + k as f64 * h;
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                w * gaussian(x, x0, sigma) * f(x)
            })
            .sum::<f64>()
            * h
    })
}

/// `I_mu = int rho(r) Xi_mu(r) dr` for the Gaussian cloud.
pub fn overlap_i(mode: ModeIndex, cloud: &CloudParams, w0: f64) -> f64 {
    let ix = axis_integral(|x| hermite_functions(mode.l, x, w0)[mode.l], cloud.center[0], cloud.sigma_x);
    let iy = axis_integral(|y| hermite_functions(mode.m, y, w0)[mode.m], cloud.center[1], cloud.sigma_y);
    ix * iy
}

/// `J_{mu,nu} = int rho(r) Xi_mu(r) Xi_nu(r) dr` for the Gaussian cloud.
pub fn overlap_j(mu: ModeIndex, nu: ModeIndex, cloud: &CloudParams, w0: f64) -> f64 {
    let lx = mu.l.max(nu.l);
    let ly = mu.m.max(nu.m);
    let jx = axis_integral(
        |x| {
            let h = hermite_functions(lx, x, w0);
            h[mu.l] * h[nu.l]
        },
        cloud.center[0],
        cloud.sigma_x,
    );
    let jy = axis_integral(
        |y| {
            let h = hermite_functions(ly, y, w0);
            h[mu.m] * h[nu.m]
        },
        cloud.center[1],
        cloud.sigma_y,
    );
    jx * jy
}

/// All single and pair overlaps along one axis from one shared composite
/// Gauss-Legendre grid, doubled until every entry has settled.
fn axis_tables(x0: f64, sigma: f64, w0: f64, l_max: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (gx, gw) = gauss_legendre(10);
    let (a, b) = (x0 - 12.0 * sigma, x0 + 12.0 * sigma);
    let eval = |panels: usize| {
        let mut single = vec![0.0; l_max + 1];
        let mut pair = vec![vec![0.0; l_max + 1]; l_max + 1];
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (t, w) in gx.iter().zip(gw) {
                let x = mid + 0.5 * h * t;
                let wt = 0.5 * h * w * gaussian(x, x0, sigma);
                let hf = hermite_functions(l_max, x, w0);
                for i in 0..=l_max {
                    single[i] += wt * hf[i];
                    for j in i..=l_max {
                        pair[i][j] += wt * hf[i] * hf[j];
                    }
                }
            }
        }
        for i in 0..=l_max {
            for j in 0..i {
                pair[i][j] = pair[j][i];
            }
        }
        (single, pair)
    };
    let flat = |t: &(Vec<f64>, Vec<Vec<f64>>)| t.0.iter().chain(t.1.iter().flatten()).copied().collect::<Vec<f64>>();
    let mut panels = 16;
    let mut prev = eval(panels);
    while panels < 1 << 14 {
        panels *= 2;
        let cur = eval(panels);
        let (u, v) = (flat(&prev), flat(&cur));
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        let diff = u.iter().zip(&v).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        prev = cur;
        if diff <= OVERLAP_TOL * scale {
            break;
        }
    }
    prev
}

/// Per-axis overlap tables, from which `I` and `J` for any mode set follow by
/// products. Used by the dynamics to avoid recomputing 1-D integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisOverlaps {
    pub l_max: usize,
    /// `ix[l]`, `iy[m]`.
    pub ix: Vec<f64>,
    pub iy: Vec<f64>,
    /// `jx[l][l']`, `jy[m][m']`.
    pub jx: Vec<Vec<f64>>,
    pub jy: Vec<Vec<f64>>,
}

impl AxisOverlaps {
    pub fn new(cloud: &CloudParams, w0: f64, l_max: usize) -> Self {
        let (ix, jx) = axis_tables(cloud.center[0], cloud.sigma_x, w0, l_max);
        let (iy, jy) = axis_tables(cloud.center[1], cloud.sigma_y, w0, l_max);
        Self { l_max, ix, iy, jx, jy }
    }

    pub fn i(&self, mode: ModeIndex) -> f64 {
        self.ix[mode.l] * self.iy[mode.m]
    }

    pub fn j(&self, mu: ModeIndex, nu: ModeIndex) -> f64 {
        self.jx[mu.l][nu.l] * self.jy[mu.m][nu.m]
    }
}
