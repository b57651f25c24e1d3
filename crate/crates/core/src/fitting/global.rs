//! Global least-squares fit of `{epsilon, alpha, Delta_0, A_i}`.

use super::lm::{covariance, degenerate_direction, minimize, LmOptions};
use super::model::{check_amplitudes, FitParams, GlobalParams, ModelContext, Problem, ScanDataset};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub epsilon: Estimate,
    /// At the `alpha = 0` bound the uncertainty is one-sided (upward).
    pub alpha: Estimate,
    pub alpha_at_bound: bool,
    pub delta_0: Estimate,
    /// `NaN` entries for amplitudes without any rows.
    pub amplitudes: Vec<Estimate>,
    /// Covariance in the layout `[epsilon, alpha, Delta_0, A_0, ...]`.
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub chi2_reduced: f64,
    pub n_iterations: usize,
    pub n_rows: usize,
    /// chi^2 after each accepted step.
    pub chi2_history: Vec<f64>,
}

impl FitResult {
    pub fn params(&self) -> FitParams {
        FitParams {
            globals: GlobalParams { epsilon: self.epsilon.value, alpha: self.alpha.value, delta_0: self.delta_0.value },
            amplitudes: self.amplitudes.iter().map(|a| a.value).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub lm: LmOptions,
    /// Condition-number limit of the scaled normal matrix.
    pub singular_limit: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { lm: LmOptions::default(), singular_limit: 1e14 }
    }
}

fn param_name(k: usize) -> String {
    match k {
        0 => "epsilon".into(),
        1 => "alpha".into(),
        2 => "delta_0".into(),
        _ => format!("A_{}", k - 3),
    }
}

/// Simultaneous damped least-squares fit of all datasets.
pub fn fit_global(datasets: &[ScanDataset], init: &FitParams, ctx: &ModelContext, opts: &FitOptions) -> Result<FitResult> {
    if datasets.is_empty() {
        return Err(Error::InvalidParameter("at least one dataset is required".into()));
    }
    check_amplitudes(init, datasets)?;
    fit_problem(&Problem::full(datasets), init, ctx, opts)
}

pub(crate) fn fit_problem(prob: &Problem<'_>, init: &FitParams, ctx: &ModelContext, opts: &FitOptions) -> Result<FitResult> {
    let n_amp = prob.n_amp;
    let mut present = vec![false; n_amp];
    for (_, i, _) in &prob.rows {
        present[*i] = true;
    }
    // Free-parameter layout: the three globals, then amplitudes with rows.
    let free: Vec<usize> = (0..3).chain((0..n_amp).filter(|i| present[*i]).map(|i| 3 + i)).collect();
    let full0 = init.to_vec();
    let expand = |q: &[f64]| {
        let mut v = full0.clone();
        for (k, &j) in free.iter().enumerate() {
            v[j] = q[k];
        }
        FitParams::from_slice(&v)
    };
    let q0: Vec<f64> = free.iter().map(|&j| full0[j]).collect();
    let scales: Vec<f64> = free.iter().map(|&j| [1e-3, 1e-4, 1.0].get(j).copied().unwrap_or(1e-3)).collect();
    let residual = |q: &[f64]| prob.residuals(&expand(q), ctx);
    let jacobian = |q: &[f64], _: &[f64]| -> Result<DMatrix<f64>> {
        let full = prob.jacobian(&expand(q), ctx)?;
        Ok(DMatrix::from_fn(full.nrows(), free.len(), |r, c| full[(r, free[c])]))
    };
    let project = |q: &mut [f64]| {
        q[0] = q[0].max(1e-6);
        q[1] = q[1].max(0.0);
    };
    let out = minimize(&q0, &scales, residual, jacobian, project, &opts.lm)?;
    if let Some(dir) = degenerate_direction(&out.jacobian, opts.singular_limit) {
        let parts: Vec<String> = dir
            .iter()
            .enumerate()
            .filter(|(_, c)| c.abs() >= 0.2)
            .map(|(k, c)| format!("{:+.2} {}", c, param_name(free[k])))
            .collect();
        return Err(Error::SingularJacobian(parts.join(" ")));
    }
    let cov_free = covariance(&out.jacobian, out.chi2)
        .ok_or_else(|| Error::SingularJacobian("normal matrix not invertible".into()))?;
    let n_full = 3 + n_amp;
    let mut cov = vec![vec![f64::NAN; n_full]; n_full];
    for (a, &ja) in free.iter().enumerate() {
        for (b, &jb) in free.iter().enumerate() {
            cov[ja][jb] = cov_free[(a, b)];
        }
    }
    let fp = expand(&out.params);
    let est = |j: usize, v: f64| Estimate { value: v, sigma: cov[j][j].sqrt() };
    let m = prob.rows.len();
    let dof = m.saturating_sub(free.len()).max(1);
    Ok(FitResult {
        epsilon: est(0, fp.globals.epsilon),
        alpha: est(1, fp.globals.alpha),
        alpha_at_bound: fp.globals.alpha == 0.0,
        delta_0: est(2, fp.globals.delta_0),
        amplitudes: (0..n_amp)
            .map(|i| if present[i] { est(3 + i, fp.amplitudes[i]) } else { Estimate { value: f64::NAN, sigma: f64::NAN } })
            .collect(),
        covariance: cov,
        chi2: out.chi2,
        chi2_reduced: out.chi2 / dof as f64,
        n_iterations: out.iterations,
        n_rows: m,
        chi2_history: out.history,
    })
}
