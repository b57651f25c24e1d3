//! Scan datasets and the threshold model used as the fit objective.

use crate::cavity_model::{CavityParams, CloudParams};
use crate::error::{invalid, Error, Result};
use crate::threshold::{e_cav_from_integrals, interaction_integrals, ThresholdOptions};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanKind {
    DetuningScan,
    PositionScan,
}

impl ScanKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScanKind::DetuningScan => "detuning",
            ScanKind::PositionScan => "position",
        }
    }
}

/// One measured threshold. `x` is the scanned variable (Delta_C in rad/us or
/// the x position in um); `delta_c` and `cloud.center` always hold the full
/// operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub kind: ScanKind,
    pub x: f64,
    pub delta_c: f64,
    pub omega_c_sq: f64,
    pub n_atoms: f64,
    pub cloud: CloudParams,
    /// Density-wave energy (rad/us) for this row.
    pub e_dw: f64,
    pub weight: f64,
}

impl ScanPoint {
    /// Dependent variable `E_dw / (N Omega_c^2)`.
    pub fn y(&self) -> f64 {
        self.e_dw / (self.n_atoms * self.omega_c_sq)
    }

    /// Weight giving every row the same relative error.
    pub fn relative_weight(&self) -> f64 {
        1.0 / self.y()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanDataset {
    pub label: String,
    pub rows: Vec<ScanPoint>,
    pub amplitude_index: usize,
}

impl ScanDataset {
    pub fn validate(&self) -> Result<()> {
        for r in &self.rows {
            if !(r.omega_c_sq > 0.0) {
                return invalid(format!("{}: omega_c_sq must be positive", self.label));
            }
            if !(r.n_atoms >= 1.0) {
                return invalid(format!("{}: n_atoms must be at least 1", self.label));
            }
            if !(r.weight > 0.0 && r.weight.is_finite()) {
                return invalid(format!("{}: weights must be positive", self.label));
            }
        }
        Ok(())
    }
}

/// Fixed inputs shared by all rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelContext {
    /// Supplies w0, kappa, g0, wavelength and the cavity kind; its epsilon,
    /// alpha, Delta_0 and Delta_C are overridden per evaluation.
    pub cavity_ref: CavityParams,
    pub delta_a: f64,
    pub threshold: ThresholdOptions,
}

impl ModelContext {
    /// Fixed quadrature rules: the model is then a smooth function of the
    /// fit parameters, which the finite-difference Jacobian relies on.
    pub fn for_fitting(cavity_ref: CavityParams, delta_a: f64) -> Self {
        let mut threshold = ThresholdOptions::fixed(4, 4);
        threshold.spec_2d.order = 3;
        Self { cavity_ref, delta_a, threshold }
    }

    pub fn cavity(&self, g: &GlobalParams, delta_c: f64) -> CavityParams {
        let mut c = self.cavity_ref;
        c.epsilon = g.epsilon;
        c.alpha = g.alpha;
        c.delta_0 = g.delta_0;
        c.delta_c = delta_c;
        c
    }
}

/// Cavity parameters shared by all datasets (rad/us).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalParams {
    pub epsilon: f64,
    pub alpha: f64,
    pub delta_0: f64,
}

/// Globals plus one amplitude per index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    pub globals: GlobalParams,
    pub amplitudes: Vec<f64>,
}

impl FitParams {
    pub fn to_vec(&self) -> Vec<f64> {
        let g = &self.globals;
        let mut v = vec![g.epsilon, g.alpha, g.delta_0];
        v.extend(&self.amplitudes);
        v
    }

    pub fn from_slice(p: &[f64]) -> Self {
        Self {
            globals: GlobalParams { epsilon: p[0], alpha: p[1], delta_0: p[2] },
            amplitudes: p[3..].to_vec(),
        }
    }
}

/// `-(g0^2 / (Delta_A^2 Delta_eff)) Re{F + N g0^2 / (2 Delta_A Delta_eff) D}`,
/// so that `y = A model` at threshold.
pub fn row_model(point: &ScanPoint, g: &GlobalParams, ctx: &ModelContext) -> Result<f64> {
    let cav = ctx.cavity(g, point.delta_c);
    let ints = interaction_integrals(&point.cloud, &cav, &ctx.threshold)?;
    let e = e_cav_from_integrals(&ints, point.n_atoms, &cav, ctx.delta_a);
    Ok(-2.0 * e.re / (point.n_atoms * point.n_atoms))
}

/// Number of amplitudes referenced by the datasets.
pub fn amplitude_count(datasets: &[ScanDataset]) -> usize {
    datasets.iter().map(|d| d.amplitude_index + 1).max().unwrap_or(0)
}

/// Flattened rows with a multiplicity, as used by the fit and the bootstrap.
#[derive(Debug, Clone)]
pub(crate) struct Problem<'a> {
    pub rows: Vec<(&'a ScanPoint, usize, f64)>,
    pub n_amp: usize,
}

impl<'a> Problem<'a> {
    pub fn full(datasets: &'a [ScanDataset]) -> Self {
        let rows = datasets
            .iter()
            .flat_map(|d| d.rows.iter().map(move |r| (r, d.amplitude_index, 1.0)))
            .collect();
        Self { rows, n_amp: amplitude_count(datasets) }
    }

    pub fn models(&self, g: &GlobalParams, ctx: &ModelContext) -> Result<Vec<f64>> {
        self.rows
            .par_iter()
            .enumerate()
            .map(|(k, (p, _, _))| {
                row_model(p, g, ctx).map_err(|e| Error::ModelEvaluationFailed { row: k, reason: e.to_string() })
            })
            .collect()
    }

    pub fn residuals_from_models(&self, models: &[f64], amps: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(models)
            .map(|((p, i, m), model)| m.sqrt() * p.weight * (p.y() - amps[*i] * model))
            .collect()
    }

    pub fn residuals(&self, params: &FitParams, ctx: &ModelContext) -> Result<Vec<f64>> {
        let m = self.models(&params.globals, ctx)?;
        Ok(self.residuals_from_models(&m, &params.amplitudes))
    }

    /// Jacobian of the residuals in the full parameter layout: central
    /// differences for the globals, exact columns for the amplitudes.
    pub fn jacobian(&self, params: &FitParams, ctx: &ModelContext) -> Result<DMatrix<f64>> {
        let g = params.globals;
        let steps = global_steps(&g);
        let mut dm: Vec<Vec<f64>> = Vec::with_capacity(3);
        for (j, h) in steps.iter().enumerate() {
            let shifted = |s: f64| {
                let mut v = [g.epsilon, g.alpha, g.delta_0];
                v[j] += s;
                GlobalParams { epsilon: v[0], alpha: v[1], delta_0: v[2] }
            };
            let col = if j == 1 && g.alpha - h < 0.0 {
                // One-sided second-order stencil at the alpha = 0 bound.
                let f0 = self.models(&g, ctx)?;
                let f1 = self.models(&shifted(*h), ctx)?;
                let f2 = self.models(&shifted(2.0 * h), ctx)?;
                (0..f0.len()).map(|k| (-3.0 * f0[k] + 4.0 * f1[k] - f2[k]) / (2.0 * h)).collect()
            } else {
                let fp = self.models(&shifted(*h), ctx)?;
                let fm = self.models(&shifted(-h), ctx)?;
                fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
            };
            dm.push(col);
        }
        let models = self.models(&g, ctx)?;
        let n = 3 + self.n_amp;
        let mut jac = DMatrix::zeros(self.rows.len(), n);
        for (k, (p, i, m)) in self.rows.iter().enumerate() {
            let s = -m.sqrt() * p.weight;
            let a = params.amplitudes[*i];
            for (j, col) in dm.iter().enumerate() {
                jac[(k, j)] = s * a * col[k];
            }
            jac[(k, 3 + i)] = s * models[k];
        }
        Ok(jac)
    }
}

/// Central-difference steps: 1e-6 relative with absolute floors.
pub(crate) fn global_steps(g: &GlobalParams) -> [f64; 3] {
    [1e-6 * g.epsilon.abs().max(1e-3), 1e-6 * g.alpha.abs().max(1e-4), 1e-6 * g.delta_0.abs().max(1.0)]
}

/// Weighted residuals `w_k (y_k - A_i model_k)` over all rows, in dataset order.
pub fn residuals(params: &FitParams, datasets: &[ScanDataset], ctx: &ModelContext) -> Result<Vec<f64>> {
    check_amplitudes(params, datasets)?;
    Problem::full(datasets).residuals(params, ctx)
}

/// Residual Jacobian with columns `[epsilon, alpha, Delta_0, A_0, ...]`.
pub fn jacobian(params: &FitParams, datasets: &[ScanDataset], ctx: &ModelContext) -> Result<DMatrix<f64>> {
    check_amplitudes(params, datasets)?;
    Problem::full(datasets).jacobian(params, ctx)
}

pub(crate) fn check_amplitudes(params: &FitParams, datasets: &[ScanDataset]) -> Result<()> {
    let need = amplitude_count(datasets);
    if params.amplitudes.len() < need {
        return invalid(format!("{} amplitudes given, datasets reference {need}", params.amplitudes.len()));
    }
    if !(params.globals.epsilon > 0.0) || !(params.globals.alpha >= 0.0) {
        return invalid("epsilon must be positive and alpha non-negative");
    }
    for d in datasets {
        d.validate()?;
    }
    Ok(())
}

/// Best amplitudes for fixed globals (weighted linear least squares per index).
pub fn profile_amplitudes(g: &GlobalParams, datasets: &[ScanDataset], ctx: &ModelContext) -> Result<Vec<f64>> {
    let prob = Problem::full(datasets);
    let models = prob.models(g, ctx)?;
    let mut num = vec![0.0; prob.n_amp];
    let mut den = vec![0.0; prob.n_amp];
    for ((p, i, m), model) in prob.rows.iter().zip(&models) {
        let w2 = m * p.weight * p.weight;
        num[*i] += w2 * p.y() * model;
        den[*i] += w2 * model * model;
    }
    Ok(num.iter().zip(&den).map(|(n, d)| if *d > 0.0 { n / d } else { f64::NAN }).collect())
}
