use super::model::{rhs_vector, DynamicsModel, MeanFieldState};
use crate::error::{invalid, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Piecewise-linear pump ramp `Omega(t)` through `(t, Omega)` knots, held
/// constant outside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampProtocol {
    pub knots: Vec<(f64, f64)>,
    pub duration: f64,
    pub seed_amplitude: f64,
}

pub const DEFAULT_SEED: f64 = 1e-6;

impl RampProtocol {
    /// Linear ramp from 0 to `omega_max` over `duration`.
    pub fn linear(omega_max: f64, duration: f64) -> Self {
        Self { knots: vec![(0.0, 0.0), (duration, omega_max)], duration, seed_amplitude: DEFAULT_SEED }
    }

    pub fn constant(omega: f64, duration: f64) -> Self {
        Self { knots: vec![(0.0, omega), (duration, omega)], duration, seed_amplitude: DEFAULT_SEED }
    }

    pub fn with_seed(mut self, seed: f64) -> Self {
        self.seed_amplitude = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.knots.is_empty() {
            return invalid("ramp needs at least one knot");
        }
        if self.knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return invalid("ramp knot times must increase");
        }
        if self.knots.iter().any(|k| !(k.1 >= 0.0) || !k.0.is_finite() || !k.1.is_finite()) {
            return invalid("ramp values must be finite and non-negative");
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return invalid("ramp duration must be positive");
        }
        if !(self.seed_amplitude > 0.0 && self.seed_amplitude <= 1e-3) {
            return invalid("seed amplitude must lie in (0, 1e-3]");
        }
        Ok(())
    }

    pub fn omega_at(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            if t <= w[1].0 {
                let f = (t - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + f * (w[1].1 - w[0].1);
            }
        }
        k[k.len() - 1].1
    }

    pub fn max_omega(&self) -> f64 {
        self.knots.iter().map(|k| k.1).fold(0.0, f64::max)
    }
}

/// Step control for the Dormand-Prince 5(4) integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    /// Error bound over the whole interval, mixed absolute/relative; each
    /// step gets the share proportional to its length.
    pub tol: f64,
    /// Spacing of the stored samples (us).
    pub sample_dt: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { tol: 1e-8, sample_dt: 0.1, max_steps: 10_000_000 }
    }
}

/// Sampled solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<MeanFieldState>,
    pub omegas: Vec<f64>,
    pub kappa: f64,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn last(&self) -> &MeanFieldState {
        self.samples.last().expect("trajectories hold at least the initial state")
    }

    pub fn fluxes(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.flux(self.kappa)).collect()
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn axpy(y: &[Complex64], h: f64, ks: &[Vec<Complex64>], coef: &[f64]) -> Vec<Complex64> {
    let mut out = y.to_vec();
    for (k, &c) in ks.iter().zip(coef) {
        if c != 0.0 {
            out.iter_mut().zip(k).for_each(|(o, v)| *o += v * (h * c));
        }
    }
    out
}

/// Adaptive Dormand-Prince integration over `[state0.time, state0.time +
/// ramp.duration]`. Steps are clipped to land on every sample time, so the
/// samples are exact step endpoints.
pub fn integrate(state0: &MeanFieldState, model: &DynamicsModel, ramp: &RampProtocol, opts: &IntegratorOptions) -> Result<Trajectory> {
    ramp.validate()?;
    if !(opts.tol > 0.0 && opts.sample_dt > 0.0) {
        return invalid("tol and sample_dt must be positive");
    }
    if state0.alphas.len() != model.n_modes() {
        return invalid(format!("state has {} modes, model has {}", state0.alphas.len(), model.n_modes()));
    }
    let t0 = state0.time;
    let t_end = t0 + ramp.duration;
    let f = |t: f64, y: &[Complex64]| rhs_vector(model, y, ramp.omega_at(t - t0));
    let mut y = state0.to_vector();
    let mut t = t0;
    let mut k1 = f(t, &y);
    let scale = y.iter().chain(&k1).map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    let mut h = (0.01 * opts.tol.powf(0.2) / (k1.iter().map(|v| v.norm()).fold(0.0, f64::max) / scale).max(1e-12))
        .min(opts.sample_dt);
    let mut traj = Trajectory {
        samples: vec![state0.clone()],
        omegas: vec![ramp.omega_at(0.0)],
        kappa: model.kappa,
        steps: 0,
        rejected: 0,
    };
    let mut next_sample = t0 + opts.sample_dt;
    while t < t_end - 1e-12 * ramp.duration {
        if traj.steps + traj.rejected >= opts.max_steps {
            return invalid(format!("integration exceeded {} steps", opts.max_steps));
        }
        let target = next_sample.min(t_end);
        let clipped = t + h >= target;
        let step = if clipped { target - t } else { h };
        if step < 1e-14 * (1.0 + t.abs()) {
            return Err(Error::StepSizeUnderflow(t));
        }
        let mut ks = vec![k1.clone()];
        for s in 1..7 {
            let ys = axpy(&y, step, &ks, &A[s][..s]);
            ks.push(f(t + C[s] * step, &ys));
        }
        let y5 = axpy(&y, step, &ks[..6], &A[6][..6]);
        let k7 = f(t + step, &y5);
        ks[6] = k7;
        // Error per unit step: the local bound shrinks with the step's share
        // of the interval, so accumulated error stays near `tol`.
        let unit = step / ramp.duration;
        let mut err: f64 = 0.0;
        for i in 0..y.len() {
            let e: Complex64 = ks.iter().zip(&E).map(|(k, c)| k[i] * *c).sum::<Complex64>() * step;
            let sc = opts.tol * unit * (1.0 + y[i].norm().max(y5[i].norm()));
            err = err.max(e.norm() / sc);
        }
        if err <= 1.0 {
            t = if clipped { target } else { t + step };
            y = y5;
            k1 = ks[6].clone();
            traj.steps += 1;
            if clipped && t >= next_sample - 1e-12 * opts.sample_dt || t >= t_end - 1e-12 * ramp.duration {
                traj.samples.push(MeanFieldState::from_vector(&y, t));
                traj.omegas.push(ramp.omega_at(t - t0));
                next_sample += opts.sample_dt;
            }
        } else {
            traj.rejected += 1;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.25)).clamp(0.2, 5.0) };
        // A clipped step says nothing about how large the free step may be.
        if !(clipped && err <= 1.0) || factor < 1.0 {
            h = step * factor;
        }
    }
    Ok(traj)
}

/// Superradiant onset: where the flux proxy first crosses the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Onset {
    pub onset_time: f64,
    pub onset_omega: f64,
}

/// First crossing of `threshold_flux` by `2 kappa sum |alpha|^2`, linearly
/// interpolated between samples.
pub fn detect_onset(traj: &Trajectory, threshold_flux: f64) -> Result<Onset> {
    let fl = traj.fluxes();
    for k in 1..fl.len() {
        if fl[k] >= threshold_flux && fl[k - 1] < threshold_flux {
            let f = (threshold_flux - fl[k - 1]) / (fl[k] - fl[k - 1]);
            let (a, b) = (&traj.samples[k - 1], &traj.samples[k]);
            return Ok(Onset {
                onset_time: a.time + f * (b.time - a.time),
                onset_omega: traj.omegas[k - 1] + f * (traj.omegas[k] - traj.omegas[k - 1]),
            });
        }
    }
    if fl.first().is_some_and(|&f| f >= threshold_flux) {
        return Ok(Onset { onset_time: traj.samples[0].time, onset_omega: traj.omegas[0] });
    }
    Err(Error::NoOnset)
}
