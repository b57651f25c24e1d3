//! Steady-state intracavity field under longitudinal pumping,
//! `Phi(r) = i kappa int D(r, r') E_p(r') dr' / Delta_eff`.

use super::field::FieldMap;
use crate::cavity_model::{hermite_functions, mode_weight, CavityKind, CavityParams, ModeIndex};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{QuadratureSpec, TauRule};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Width of the sharpest Mehler component, `w0 sqrt(tanh alpha)`; the grid
/// must sample it with at least four points.
pub fn effective_waist(cavity: &CavityParams) -> f64 {
    match cavity.kind {
        CavityKind::SingleMode => cavity.w0,
        CavityKind::Confocal => cavity.w0 * cavity.alpha.tanh().sqrt(),
    }
}

fn check_grid(pump: &FieldMap, cavity: &CavityParams) -> Result<()> {
    pump.validate()?;
    let limit = effective_waist(cavity) / 4.0;
    let spacing = pump.dx.max(pump.dy);
    if spacing > limit {
        return Err(Error::GridTooCoarse { spacing, limit });
    }
    let edge = pump.edge_fraction();
    if edge > 1e-6 {
        return invalid(format!("pump is not contained in the grid (edge/peak = {edge:.2e})"));
    }
    Ok(())
}

/// `f_mu = int Xi_mu E_p dA` by grid quadrature.
pub fn longitudinal_overlap(pump: &FieldMap, mode: ModeIndex, w0: f64) -> Complex64 {
    let hx: Vec<f64> = (0..pump.nx).map(|i| hermite_functions(mode.l, pump.x(i), w0)[mode.l]).collect();
    let hy: Vec<f64> = (0..pump.ny).map(|j| hermite_functions(mode.m, pump.y(j), w0)[mode.m]).collect();
    let mut acc = c(0.0);
    for j in 0..pump.ny {
        let mut row = c(0.0);
        for i in 0..pump.nx {
            row += pump.at(i, j) * hx[i];
        }
        acc += row * hy[j];
    }
    acc * pump.dx * pump.dy
}

/// All overlaps `f_{l,m}` with `l, m <= l_max` as an `(l_max+1)^2` matrix.
pub fn overlap_matrix(pump: &FieldMap, l_max: usize, w0: f64) -> DMatrix<Complex64> {
    let hx = hermite_table(l_max, pump.nx, |i| pump.x(i), w0);
    let hy = hermite_table(l_max, pump.ny, |j| pump.y(j), w0);
    let e = pump_matrix(pump);
    (&hx * e * hy.transpose()) * c(pump.dx * pump.dy)
}

fn hermite_table<F: Fn(usize) -> f64>(l_max: usize, n: usize, coord: F, w0: f64) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(l_max + 1, n);
    for i in 0..n {
        for (l, v) in hermite_functions(l_max, coord(i), w0).into_iter().enumerate() {
            m[(l, i)] = c(v);
        }
    }
    m
}

/// Pump as an `nx x ny` matrix indexed `(i, j)`.
fn pump_matrix(pump: &FieldMap) -> DMatrix<Complex64> {
    DMatrix::from_fn(pump.nx, pump.ny, |i, j| pump.at(i, j))
}

fn to_field(template: &FieldMap, m: &DMatrix<Complex64>) -> FieldMap {
    let mut out = template.clone();
    for j in 0..out.ny {
        for i in 0..out.nx {
            out.data[j * out.nx + i] = m[(i, j)];
        }
    }
    out
}

/// Mode-sum path: `Phi = (i kappa / Delta_eff) sum_mu W_mu f_mu Xi_mu` over
/// modes with `n <= n_max`.
pub fn steady_state_field_spectral(pump: &FieldMap, cavity: &CavityParams, n_max: usize) -> Result<FieldMap> {
    pump.validate()?;
    let kp = cavity.kernel()?;
    let hx = hermite_table(n_max, pump.nx, |i| pump.x(i), cavity.w0);
    let hy = hermite_table(n_max, pump.ny, |j| pump.y(j), cavity.w0);
    let mut f = (&hx * pump_matrix(pump) * hy.transpose()) * c(pump.dx * pump.dy);
    for l in 0..=n_max {
        for m in 0..=n_max {
            f[(l, m)] *= if l + m <= n_max { mode_weight(ModeIndex::new(l, m), &kp) } else { c(0.0) };
        }
    }
    let phi = hx.transpose() * f * hy;
    let pre = Complex64::new(0.0, cavity.kappa) / cavity.effective_detuning();
    Ok(to_field(pump, &(phi * pre)))
}

/// One-axis Mehler factor `(1 - t^2)^{-1/2} exp(...)` for scaled Hermite
/// functions.
fn mehler_axis(n_out: usize, out: impl Fn(usize) -> f64, n_in: usize, inp: impl Fn(usize) -> f64, t: Complex64, w0: f64) -> DMatrix<Complex64> {
    let t2 = t * t;
    let d = c(1.0) - t2;
    let a = (c(1.0) + t2) / d;
    let b = t * 2.0 / d;
    let pre = d.sqrt().inv();
    let w2 = w0 * w0;
    DMatrix::from_fn(n_out, n_in, |i, j| {
        let (x, xp) = (out(i), inp(j));
        pre * (-a * (x * x + xp * xp) / w2 + b * 2.0 * x * xp / w2).exp()
    })
}

/// Split `E = sum_k u_k v_k^T` with a column-pivoted QR, dropping rows of R
/// below 1e-15 of the leading pivot. (The SVD in nalgebra loses accuracy on
/// off-center Gaussians, which are exactly rank one.)
fn separable_terms(e: DMatrix<Complex64>) -> Vec<(DVector<Complex64>, DVector<Complex64>)> {
    let n = e.ncols();
    let qr = e.col_piv_qr();
    let (q, r, p) = (qr.q(), qr.r(), qr.p());
    let lead = r[(0, 0)].norm();
    let rank = (0..r.nrows().min(n)).take_while(|&k| r[(k, k)].norm() > 1e-15 * lead).count();
    let mut rows = r.rows(0, rank).into_owned();
    p.inv_permute_columns(&mut rows);
    (0..rank).map(|k| (q.column(k).into_owned(), rows.row(k).transpose().into_owned())).collect()
}

/// Kernel path: the tau integral of the symmetrized Mehler kernel applied to
/// the pump. The pump is split into separable terms, so each tau
/// node costs `O(rank N^2)`. Panel doubling continues until successive
/// fields agree to `spec.target_rel_err`.
pub fn steady_state_field(pump: &FieldMap, cavity: &CavityParams, spec: &QuadratureSpec) -> Result<FieldMap> {
    spec.validate()?;
    let kp = cavity.kernel()?;
    check_grid(pump, cavity)?;
    let pre = Complex64::new(0.0, cavity.kappa) / cavity.effective_detuning();
    if kp.kind == CavityKind::SingleMode {
        let f00 = longitudinal_overlap(pump, ModeIndex::new(0, 0), cavity.w0);
        let w = mode_weight(ModeIndex::new(0, 0), &kp);
        let w2 = cavity.w0 * cavity.w0;
        let mut out = pump.clone();
        for j in 0..pump.ny {
            for i in 0..pump.nx {
                let xi = (-(pump.x(i).powi(2) + pump.y(j).powi(2)) / w2).exp();
                out.data[j * pump.nx + i] = pre * w * f00 * xi;
            }
        }
        return Ok(out);
    }
    let terms = separable_terms(pump_matrix(pump));
    let scale = (kp.alpha.max(1e-12) / kp.eps_t).min(1.0);
    let apply = |level: u32| -> DMatrix<Complex64> {
        let rule = TauRule::for_spec(scale, spec, level);
        let mut acc = DMatrix::<Complex64>::zeros(pump.nx, pump.ny);
        for (&tau, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let t = (-kp.eps_t * tau - kp.alpha).exp();
            let weight = Complex64::from_polar((-tau).exp(), -kp.kappa_t * tau) * (wt / 4.0);
            for t0 in [c(t), Complex64::new(0.0, t)] {
                // t0 and -t0: the latter mirrors r' -> -r'.
                let kx = mehler_axis(pump.nx, |i| pump.x(i), pump.nx, |i| pump.x(i), t0, cavity.w0);
                let kxm = mehler_axis(pump.nx, |i| pump.x(i), pump.nx, |i| -pump.x(i), t0, cavity.w0);
                let ky = mehler_axis(pump.ny, |j| pump.y(j), pump.ny, |j| pump.y(j), t0, cavity.w0);
                let kym = mehler_axis(pump.ny, |j| pump.y(j), pump.ny, |j| -pump.y(j), t0, cavity.w0);
                for (uk, vk) in &terms {
                    let (ax, axm) = (&kx * uk, &kxm * uk);
                    let (by, bym) = (&ky * vk, &kym * vk);
                    acc += (ax * by.transpose() + axm * bym.transpose()) * weight;
                }
            }
        }
        acc * (pre * pump.dx * pump.dy)
    };
    let mut prev = apply(0);
    for level in 1..=spec.max_doublings {
        let next = apply(level);
        let peak = next.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let diff = (&next - &prev).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if diff <= spec.target_rel_err * peak {
            return Ok(to_field(pump, &next));
        }
        prev = next;
        if level == spec.max_doublings {
            return Err(Error::QuadratureNotConverged { estimate: diff / peak, target: spec.target_rel_err });
        }
    }
    Ok(to_field(pump, &prev))
}
