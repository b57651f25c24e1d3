//! A small bounded Levenberg-Marquardt driver shared by the global fit and
//! the profile fits.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers chi^2 by less than this fraction.
    pub ftol: f64,
    /// Stop when every step component is below `xtol * (|p| + scale)`.
    pub xtol: f64,
    pub lambda0: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 200, ftol: 1e-12, xtol: 1e-11, lambda0: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub chi2: f64,
    pub iterations: usize,
    /// chi^2 after each accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

pub(crate) fn chi2(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Minimize `sum r_k(p)^2`. `project` maps a trial point back into the
/// feasible set; a trial point whose residuals fail to evaluate counts as a
/// rejected step.
pub fn minimize<R, J, P>(
    p0: &[f64],
    scales: &[f64],
    residual: R,
    jacobian: J,
    project: P,
    opts: &LmOptions,
) -> Result<LmOutcome>
where
    R: Fn(&[f64]) -> Result<Vec<f64>>,
    J: Fn(&[f64], &[f64]) -> Result<DMatrix<f64>>,
    P: Fn(&mut [f64]),
{
    let mut p = p0.to_vec();
    project(&mut p);
    let mut r = residual(&p)?;
    let mut c2 = chi2(&r);
    let mut jac = jacobian(&p, &r)?;
    let mut lambda = opts.lambda0;
    let mut history = vec![c2];
    let n = p.len();
    for iter in 1..=opts.max_iterations {
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        let dmax = (0..n).map(|i| a[(i, i)]).fold(0.0, f64::max);
        let mut accepted = false;
        let mut converged = false;
        while lambda < 1e16 {
            let mut m = a.clone();
            for i in 0..n {
                m[(i, i)] += lambda * a[(i, i)].max(1e-30 * dmax.max(1e-300));
            }
            let Some(chol) = m.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-&g));
            let mut trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(x, d)| x + d).collect();
            project(&mut trial);
            let small = trial
                .iter()
                .zip(&p)
                .zip(scales)
                .all(|((t, x), s)| (t - x).abs() <= opts.xtol * (x.abs() + s));
            match residual(&trial) {
                Ok(rt) => {
                    let ct = chi2(&rt);
                    if ct < c2 {
                        let gain = (c2 - ct) / c2.max(1e-300);
                        p = trial;
                        r = rt;
                        c2 = ct;
                        history.push(c2);
                        lambda = (lambda / 10.0).max(1e-15);
                        accepted = true;
                        converged = gain < opts.ftol || small || c2 == 0.0;
                        break;
                    }
                    if small {
                        converged = true;
                        break;
                    }
                }
                Err(e) => log::debug!("rejected trial step: {e}"),
            }
            lambda *= 10.0;
        }
        if accepted {
            jac = jacobian(&p, &r)?;
        }
        if converged || !accepted {
            // Either the step criterion fired or no damping level improves
            // chi^2: a stationary point to working precision.
            return Ok(LmOutcome { params: p, residuals: r, jacobian: jac, chi2: c2, iterations: iter, history });
        }
    }
    Err(Error::MaxIterations(opts.max_iterations))
}

/// Central-difference Jacobian of a residual function.
pub fn numeric_jacobian<R>(p: &[f64], steps: &[f64], residual: R) -> Result<DMatrix<f64>>
where
    R: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut cols = Vec::with_capacity(p.len());
    for (j, &h) in steps.iter().enumerate() {
        let mut a = p.to_vec();
        let mut b = p.to_vec();
        a[j] += h;
        b[j] -= h;
        let (ra, rb) = (residual(&a)?, residual(&b)?);
        cols.push(ra.iter().zip(&rb).map(|(x, y)| (x - y) / (2.0 * h)).collect::<Vec<_>>());
    }
    let m = cols.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(m, p.len(), |i, j| cols[j][i]))
}

/// `s^2 (J^T J)^-1` with `s^2 = chi^2 / (m - n)`; `None` if singular.
pub fn covariance(jac: &DMatrix<f64>, chi2: f64) -> Option<DMatrix<f64>> {
    let (m, n) = jac.shape();
    let a = jac.transpose() * jac;
    let inv = a.try_inverse()?;
    let s2 = if m > n { chi2 / (m - n) as f64 } else { 1.0 };
    Some(inv * s2)
}

/// Smallest-eigenvalue direction of the correlation-scaled normal matrix if
/// its condition number exceeds `limit`.
pub fn degenerate_direction(jac: &DMatrix<f64>, limit: f64) -> Option<Vec<f64>> {
    let a = jac.transpose() * jac;
    let n = a.nrows();
    let d: Vec<f64> = (0..n).map(|i| a[(i, i)].max(1e-300).sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (d[i] * d[j]));
    let eig = s.symmetric_eigen();
    let (mut kmin, mut kmax) = (0, 0);
    for k in 0..n {
        if eig.eigenvalues[k] < eig.eigenvalues[kmin] {
            kmin = k;
        }
        if eig.eigenvalues[k] > eig.eigenvalues[kmax] {
            kmax = k;
        }
    }
    let ratio = eig.eigenvalues[kmin].max(0.0) / eig.eigenvalues[kmax];
    if ratio * limit < 1.0 || (0..n).any(|i| a[(i, i)] == 0.0) {
        Some(eig.eigenvectors.column(kmin).iter().copied().collect())
    } else {
        None
    }
}
