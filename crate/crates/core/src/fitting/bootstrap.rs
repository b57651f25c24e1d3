//! Resampling error analysis: refit on row samples drawn with replacement.

use super::global::{fit_problem, FitOptions, FitResult};
use super::model::{check_amplitudes, FitParams, ModelContext, Problem, ScanDataset};
use crate::error::{invalid, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Per-parameter ensemble statistics over successful replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    /// Replicas in which the parameter was determined.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub seed: u64,
    pub n_resamples: usize,
    /// One entry per replica; `None` marks a failed refit.
    pub replicas: Vec<Option<FitResult>>,
    pub failures: Vec<(usize, String)>,
    pub summary: Vec<ParamSummary>,
    /// Covariance of `[epsilon, alpha, Delta_0]` across replicas.
    pub global_covariance: [[f64; 3]; 3],
}

impl BootstrapResult {
    pub fn n_failed(&self) -> usize {
        self.failures.len()
    }

    pub fn param(&self, name: &str) -> Option<&ParamSummary> {
        self.summary.iter().find(|s| s.name == name)
    }
}

/// Row indices (into the pooled row list) for replica `k`; the generator is
/// seeded from `(seed, k)` so replicas are independent of scheduling.
pub fn replica_sample(seed: u64, replica: usize, n_rows: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica as u64 + 1);
    (0..n_rows).map(|_| rng.random_range(0..n_rows)).collect()
}

/// Bootstrap with the default ChaCha8 sampler; each replica refits from `init`.
pub fn bootstrap(
    datasets: &[ScanDataset],
    init: &FitParams,
    ctx: &ModelContext,
    opts: &FitOptions,
    n_resamples: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    bootstrap_with_sampler(datasets, init, ctx, opts, n_resamples, seed, |k, n| replica_sample(seed, k, n))
}

/// Bootstrap with a caller-supplied sampler `(replica, n_rows) -> indices`.
pub fn bootstrap_with_sampler<S>(
    datasets: &[ScanDataset],
    init: &FitParams,
    ctx: &ModelContext,
    opts: &FitOptions,
    n_resamples: usize,
    seed: u64,
    sampler: S,
) -> Result<BootstrapResult>
where
    S: Fn(usize, usize) -> Vec<usize> + Sync,
{
    if n_resamples < 2 {
        return invalid("n_resamples must be at least 2");
    }
    check_amplitudes(init, datasets)?;
    let full = Problem::full(datasets);
    let n_rows = full.rows.len();
    let outcomes: Vec<std::result::Result<FitResult, String>> = (0..n_resamples)
        .into_par_iter()
        .map(|k| {
            let mut counts = vec![0usize; n_rows];
            for i in sampler(k, n_rows) {
                counts[i] += 1;
            }
            let rows = full
                .rows
                .iter()
                .zip(&counts)
                .filter(|(_, c)| **c > 0)
                .map(|(&(p, i, _), &c)| (p, i, c as f64))
                .collect();
            let prob = Problem { rows, n_amp: full.n_amp };
            fit_problem(&prob, init, ctx, opts).map_err(|e| e.to_string())
        })
        .collect();
    let mut replicas = Vec::with_capacity(n_resamples);
    let mut failures = Vec::new();
    for (k, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(f) => replicas.push(Some(f)),
            Err(e) => {
                log::warn!("bootstrap replica {k} failed: {e}");
                failures.push((k, e));
                replicas.push(None);
            }
        }
    }
    let ok: Vec<&FitResult> = replicas.iter().flatten().collect();
    let n_par = 3 + full.n_amp;
    let mut summary = Vec::with_capacity(n_par);
    let value = |f: &FitResult, j: usize| match j {
        0 => f.epsilon.value,
        1 => f.alpha.value,
        2 => f.delta_0.value,
        _ => f.amplitudes[j - 3].value,
    };
    for j in 0..n_par {
        let mut v: Vec<f64> = ok.iter().map(|f| value(f, j)).filter(|x| x.is_finite()).collect();
        let name = match j {
            0 => "epsilon".to_string(),
            1 => "alpha".to_string(),
            2 => "delta_0".to_string(),
            _ => format!("A_{}", j - 3),
        };
        summary.push(stats(name, &mut v));
    }
    let mut cov = [[f64::NAN; 3]; 3];
    if ok.len() >= 2 {
        let means: Vec<f64> = (0..3).map(|j| summary[j].mean).collect();
        for a in 0..3 {
            for b in 0..3 {
                let s: f64 = ok.iter().map(|f| (value(f, a) - means[a]) * (value(f, b) - means[b])).sum();
                cov[a][b] = s / (ok.len() - 1) as f64;
            }
        }
    }
    Ok(BootstrapResult { seed, n_resamples, replicas, failures, summary, global_covariance: cov })
}

fn stats(name: String, v: &mut [f64]) -> ParamSummary {
    let n = v.len();
    if n == 0 {
        return ParamSummary { name, mean: f64::NAN, median: f64::NAN, std: f64::NAN, count: 0 };
    }
    v.sort_by(f64::total_cmp);
    let mean = v.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    let std = if n > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
    ParamSummary { name, mean, median, std, count: n }
}
