//! Subcommand implementations. Each command computes everything first and
//! only then writes its files, so a failed run leaves nothing behind.

use crate::config::Config;
use crate::output::{self, num, RunManifest, Series, Table};
use crate::{dataset, Common};
use crate::{
    BootstrapArgs, CoopArgs, DataSource, DeconvolveArgs, DynamicsArgs, FitArgs, GreensMapArgs, GreensMethod,
    ImageArgs, ModesArgs, ScanArgs, ScanMode,
};
use anyhow::{Context, Result};
use cavity_kit::cavity_model::{mode_weight, ModeIndex};
use cavity_kit::cooperativity::enhancement;
use cavity_kit::dynamics::{
    adiabatic_mode_amplitudes, detect_onset, integrate, truncation_change, DynamicsModel, IntegratorOptions,
    MeanFieldState, RampProtocol,
};
use cavity_kit::fitting::{
    self, fit_global, interaction_profile, reference_amplitudes, reference_design, peak_offset_correction, sampled_hwhm,
    simulate_position_profile, synthesize_dataset, voigt_deconvolve, FitOptions, FitParams, FitResult, NoiseModel,
    ScanDataset, ScanKind,
};
use cavity_kit::greens::{greens_point, mode_sum_oracle};
use cavity_kit::imaging::{
    effective_waist, extract_gaussian_width, field_sigma_from_intensity, greens_width_estimate, kernel_hwhm,
    steady_state_field, transmission_image, FieldMap,
};
use cavity_kit::quadrature::QuadratureSpec;
use cavity_kit::threshold::{scan_detuning, scan_position, ThresholdOptions};
use cavity_kit::units::{mhz, to_mhz};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

/// Bad input detected before any computation: exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

enum Artifact {
    Csv(Table),
    Json(Value),
    Pgm { width: usize, height: usize, data: Vec<f64> },
    Svg { title: String, xlabel: String, ylabel: String, series: Vec<Series> },
}

/// One command invocation: resolved configuration, the options that feed
/// the numerics and the files to emit.
struct Run {
    command: &'static str,
    cfg: Config,
    options: Value,
    started: String,
    files: Vec<(PathBuf, Artifact)>,
}

impl Run {
    fn start(command: &'static str, common: &Common, options: Value) -> Result<Self> {
        let cfg = Config::load_or_default(common.config.as_deref()).map_err(|e| usage(format!("{e:#}")))?;
        Ok(Self { command, cfg, options, started: output::now_utc(), files: Vec::new() })
    }

    fn add(&mut self, path: &Path, a: Artifact) {
        self.files.push((path.to_path_buf(), a));
    }

    /// Write every artifact and the manifest beside the first one.
    fn finish(self) -> Result<()> {
        for (p, a) in &self.files {
            match a {
                Artifact::Csv(t) => t.write(p)?,
                Artifact::Json(v) => output::write_json(p, v)?,
                Artifact::Pgm { width, height, data } => output::write_pgm16(p, *width, *height, data)?,
                Artifact::Svg { title, xlabel, ylabel, series } => {
                    output::write_svg_plot(p, title, xlabel, ylabel, series)?
                }
            }
        }
        let inputs = json!({ "command": self.command, "options": self.options, "config": self.cfg });
        let manifest = RunManifest {
            command: self.command.to_string(),
            config_hash: output::config_hash(&inputs),
            seed: self.cfg.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_utc: self.started,
            finished_utc: output::now_utc(),
            outputs: self.files.iter().map(|(p, _)| p.display().to_string()).collect(),
            inputs,
        };
        let primary = &self.files.first().context("command produced no output")?.0;
        output::write_json(&output::manifest_path(primary), &manifest)
    }
}

fn sibling(out: &Path, explicit: &Option<PathBuf>, ext: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| out.with_extension(ext))
}

pub fn modes(a: ModesArgs) -> Result<()> {
    let mut run = Run::start("modes", &a.common, json!({ "n_max": a.n_max }))?;
    let kp = run.cfg.cavity().kernel()?;
    let mut t = Table::new(&["l", "m", "n", "weight_re", "weight_im", "midplane_overlap"]);
    for mode in ModeIndex::up_to(a.n_max) {
        let w = mode_weight(mode, &kp);
        t.push(vec![
            mode.l.to_string(),
            mode.m.to_string(),
            mode.n().to_string(),
            num(w.re),
            num(w.im),
            num(mode.midplane_overlap()),
        ]);
    }
    run.add(&a.common.out, Artifact::Csv(t));
    run.finish()
}

pub fn greens_map(a: GreensMapArgs) -> Result<()> {
    if a.points < 1 || !(a.half_extent_um >= 0.0) {
        return Err(usage("--points must be positive and --half-extent-um non-negative"));
    }
    let opts = json!({ "source_um": a.source_um, "half_extent_um": a.half_extent_um, "points": a.points, "method": a.method });
    let mut run = Run::start("greens-map", &a.common, opts)?;
    let cav = run.cfg.cavity();
    let kp = cav.kernel()?;
    let spec = QuadratureSpec::kernel();
    let n = a.points;
    let coord = |k: usize| if n == 1 { 0.0 } else { -a.half_extent_um + 2.0 * a.half_extent_um * k as f64 / (n - 1) as f64 };
    let pts: Vec<[f64; 2]> = (0..n).flat_map(|j| (0..n).map(move |i| [coord(i), coord(j)])).collect();
    let rp = a.source_um;
    let vals: Vec<(Complex64, &str, f64)> = pts
        .par_iter()
        .map(|&r| -> Result<_> {
            Ok(match a.method {
                GreensMethod::Quadrature => {
                    let s = greens_point(r, rp, &kp, &spec)?;
                    (s.value, s.method.as_str(), s.rel_err_est)
                }
                GreensMethod::ModeSum => {
                    let full = mode_sum_oracle(r, rp, &kp, cav.n_max);
                    let part = mode_sum_oracle(r, rp, &kp, cav.n_max.saturating_sub(4));
                    (full, "mode_sum", (full - part).norm() / full.norm().max(f64::MIN_POSITIVE))
                }
            })
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&["x_um", "y_um", "re_D", "im_D", "method", "rel_err_est"]);
    for (r, (v, m, e)) in pts.iter().zip(vals) {
        t.push(vec![num(r[0]), num(r[1]), num(v.re), num(v.im), m.to_string(), num(e)]);
    }
    run.add(&a.common.out, Artifact::Csv(t));
    run.finish()
}

pub fn coop_curve(a: CoopArgs) -> Result<()> {
    let mut run = Run::start("coop-curve", &a.common, json!({ "detunings_MHz": a.detunings }))?;
    let base = run.cfg.cavity();
    let cloud = (!run.cfg.cloud.point_particle).then(|| run.cfg.cloud());
    let spec = QuadratureSpec::kernel();
    let rows = a
        .detunings
        .0
        .par_iter()
        .map(|&d| {
            let kp = base.with_delta_c(mhz(d)).kernel()?;
            enhancement(&kp, cloud.as_ref(), &spec).with_context(|| format!("Delta_C/2pi = {d} MHz"))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["detuning_MHz", "ratio_quadrature", "ratio_closed_form", "c_mm"]);
    for (d, e) in a.detunings.0.iter().zip(&rows) {
        t.push(vec![num(*d), num(e.quadrature), num(e.closed_form), num(e.c_mm)]);
    }
    run.add(&a.common.out, Artifact::Csv(t));
    if let Some(svg) = &a.svg {
        let pts = a.detunings.0.iter().zip(&rows).map(|(d, e)| (d.abs(), e.closed_form)).collect();
        run.add(
            svg,
            Artifact::Svg {
                title: "Cooperativity enhancement".into(),
                xlabel: "|Delta_C|/2pi (MHz)".into(),
                ylabel: "C_mm / C".into(),
                series: vec![Series { name: "closed form".into(), points: pts }],
            },
        );
    }
    run.finish()
}

pub fn threshold_scan(a: ScanArgs) -> Result<()> {
    let xs = match a.mode {
        ScanMode::Detuning => &a.detunings,
        ScanMode::Position => &a.positions,
    };
    let opts = json!({ "mode": a.mode, "values": xs, "first_order": a.first_order });
    let mut run = Run::start("threshold-scan", &a.common, opts)?;
    let cfg = &run.cfg;
    let topts = if a.first_order { ThresholdOptions::first_order_only() } else { ThresholdOptions::default() };
    let (cloud, cav, pump) = (cfg.cloud(), cfg.cavity(), cfg.pump());
    let (rows, xcol) = match a.mode {
        ScanMode::Detuning => {
            let ds: Vec<f64> = xs.0.iter().map(|&d| mhz(d)).collect();
            (scan_detuning(&cloud, &cav, &pump, &ds, &topts), "detuning_MHz")
        }
        ScanMode::Position => (scan_position(&cloud, &cav, &pump, &xs.0, &topts), "x_um"),
    };
    let mut t = Table::new(&[
        xcol,
        "status",
        "omega_c_MHz",
        "omega_c_sq_norm_MHz2",
        "enhancement_re",
        "dispersive_re",
        "e_dw_kHz",
    ]);
    let mut curve = Vec::new();
    for (row, &x) in rows.iter().zip(&xs.0) {
        match &row.result {
            Ok(r) => {
                curve.push((x, to_mhz(r.omega_c)));
                t.push(vec![
                    num(x),
                    "ok".into(),
                    num(to_mhz(r.omega_c)),
                    num(r.omega_c_sq_norm / mhz(1.0).powi(2)),
                    num(r.first_order.re),
                    num(r.dispersive.re),
                    num(to_mhz(r.e_dw) * 1e3),
                ]);
            }
            Err(e) => {
                let status = match e {
                    cavity_kit::Error::NoThreshold(_) => "no_threshold",
                    cavity_kit::Error::InvalidParameter(_) => "invalid",
                    _ => "error",
                };
                log::warn!("{xcol} = {x}: {e}");
                t.push(vec![num(x), status.into(), String::new(), String::new(), String::new(), String::new(), String::new()]);
            }
        }
    }
    run.add(&a.common.out, Artifact::Csv(t));
    if let Some(svg) = &a.svg {
        run.add(
            svg,
            Artifact::Svg {
                title: "Superradiant threshold".into(),
                xlabel: xcol.into(),
                ylabel: "Omega_c/2pi (MHz)".into(),
                series: vec![Series { name: "Omega_c".into(), points: curve }],
            },
        );
    }
    run.finish()
}

fn load_datasets(src: &DataSource, cfg: &Config) -> Result<Vec<ScanDataset>> {
    if let Some(p) = &src.data {
        return dataset::read(p, cfg.cavity().wavelength).map_err(|e| usage(format!("{e:#}")));
    }
    let designs = reference_design();
    let n_amp = designs.iter().map(|d| d.amplitude_index + 1).max().unwrap_or(0);
    let truth = FitParams { globals: cfg.fit_truth(), amplitudes: reference_amplitudes(n_amp) };
    let noise = NoiseModel { rel_sigma: cfg.fit.noise_rel };
    Ok(synthesize_dataset(&truth, &cfg.model_context(), &designs, noise, cfg.seed)?)
}

fn fit_summary(r: &FitResult) -> Value {
    let f = to_mhz(1.0);
    json!({
        "epsilon_over_2pi_MHz": r.epsilon.value * f,
        "epsilon_sigma_MHz": r.epsilon.sigma * f,
        "alpha": r.alpha.value,
        "alpha_sigma": r.alpha.sigma,
        "alpha_at_bound": r.alpha_at_bound,
        "delta_0_over_2pi_MHz": r.delta_0.value * f,
        "delta_0_sigma_MHz": r.delta_0.sigma * f,
        "chi2_reduced": r.chi2_reduced,
        "n_rows": r.n_rows,
    })
}

fn run_fit(datasets: &[ScanDataset], cfg: &Config) -> Result<FitResult> {
    let init = cfg.fit_init(fitting::amplitude_count(datasets));
    Ok(fit_global(datasets, &init, &cfg.model_context(), &FitOptions::default())?)
}

pub fn fit(a: FitArgs) -> Result<()> {
    let mut run = Run::start("fit", &a.common, json!({ "source": a.source }))?;
    let datasets = load_datasets(&a.source, &run.cfg)?;
    let result = run_fit(&datasets, &run.cfg)?;
    let doc = json!({
        "summary": fit_summary(&result),
        "units": "epsilon and delta_0 in rad/us in `result`",
        "n_datasets": datasets.len(),
        "seed": run.cfg.seed,
        "result": result,
    });
    run.add(&a.common.out, Artifact::Json(doc));
    if let Some(p) = &a.data_out {
        run.add(p, Artifact::Csv(dataset::to_table(&datasets)));
    }
    run.finish()
}

pub fn bootstrap(a: BootstrapArgs) -> Result<()> {
    let opts = json!({ "source": a.source, "resamples": a.resamples });
    let mut run = Run::start("bootstrap", &a.common, opts)?;
    let n = a.resamples.unwrap_or(run.cfg.fit.resamples);
    if n < 2 {
        return Err(usage("at least two resamples are needed"));
    }
    let datasets = load_datasets(&a.source, &run.cfg)?;
    let point = run_fit(&datasets, &run.cfg)?;
    let ctx = run.cfg.model_context();
    let b = fitting::bootstrap(&datasets, &point.params(), &ctx, &FitOptions::default(), n, run.cfg.seed)?;
    let eps_spread = b.param("epsilon").map(|s| s.std);
    let doc = json!({
        "point_fit": fit_summary(&point),
        "seed": b.seed,
        "n_resamples": b.n_resamples,
        "n_failed": b.n_failed(),
        "failures": b.failures,
        "epsilon_spread_over_2pi_MHz": eps_spread.map(to_mhz),
        "epsilon_spread_over_ls_sigma": eps_spread.map(|s| s / point.epsilon.sigma),
        "summary": b.summary,
        "global_covariance": b.global_covariance,
    });
    run.add(&a.common.out, Artifact::Json(doc));
    if let Some(p) = &a.replicas_out {
        let mut t = Table::new(&["replica", "status", "epsilon_MHz", "alpha", "delta_0_MHz", "chi2"]);
        for (k, r) in b.replicas.iter().enumerate() {
            match r {
                Some(r) => t.push(vec![
                    k.to_string(),
                    "ok".into(),
                    num(to_mhz(r.epsilon.value)),
                    num(r.alpha.value),
                    num(to_mhz(r.delta_0.value)),
                    num(r.chi2),
                ]),
                None => t.push(vec![k.to_string(), "failed".into(), String::new(), String::new(), String::new(), String::new()]),
            }
        }
        run.add(p, Artifact::Csv(t));
    }
    run.finish()
}

pub fn deconvolve(a: DeconvolveArgs) -> Result<()> {
    if a.scan.is_none() && !a.simulate {
        return Err(usage("deconvolve needs --scan <csv> or --simulate"));
    }
    let opts = json!({
        "scan": a.scan, "simulate": a.simulate, "positions_um": a.positions,
        "sigma_cloud_um": a.sigma_cloud_um, "center": a.center,
    });
    let mut run = Run::start("deconvolve", &a.common, opts)?;
    let cfg = &run.cfg;
    let (mut xs, ys, sigma_default) = match &a.scan {
        Some(p) => {
            let ds = dataset::read(p, cfg.cavity().wavelength).map_err(|e| usage(format!("{e:#}")))?;
            let scan = ds
                .iter()
                .find(|d| d.rows.first().is_some_and(|r| r.kind == ScanKind::PositionScan))
                .ok_or_else(|| usage(format!("{}: no position scan", p.display())))?;
            let (x, y) = interaction_profile(scan);
            (x, y, scan.rows[0].cloud.sigma_x)
        }
        None => {
            let cloud = cfg.cloud();
            let y = simulate_position_profile(&cloud, &cfg.cavity(), cfg.delta_a(), &a.positions.0, &ThresholdOptions::default())?;
            (a.positions.0.clone(), y, cloud.sigma_x)
        }
    };
    let sigma = a.sigma_cloud_um.unwrap_or(sigma_default);
    let shift = if a.center {
        let c = peak_offset_correction(&xs, &ys)?;
        xs = c.x_corrected;
        Some(c.shift)
    } else {
        None
    };
    let v = voigt_deconvolve(&xs, &ys, sigma)?;
    let doc = json!({
        "resolution_hwhm_um": v.hwhm_lorentz,
        "resolution_sigma_um": v.hwhm_lorentz_sigma,
        "profile_hwhm_um": sampled_hwhm(&xs, &ys).ok(),
        "sigma_cloud_um": sigma,
        "offset_shift_um": shift,
        "voigt": v,
        "n_points": xs.len(),
    });
    run.add(&a.common.out, Artifact::Json(doc));
    run.finish()
}

pub fn image(a: ImageArgs) -> Result<()> {
    let mut run = Run::start("image", &a.common, json!({}))?;
    let cfg = &run.cfg;
    let cav = cfg.cavity();
    let im = &cfg.imaging;
    let c = im.pump_center_um;
    let offset = c[0].abs().max(c[1].abs());
    let hwhm = kernel_hwhm(&cav)?;
    let half = im.half_extent_um.unwrap_or((5.0 * hwhm).max(4.0 * im.pump_waist_um) + offset);
    let n = match im.grid_points {
        Some(n) => n,
        None => {
            let dx = (effective_waist(&cav) / 4.0).min(hwhm / 4.0).min(im.pump_waist_um / 4.0);
            ((2.0 * half / dx).ceil() as usize + 1) | 1
        }
    };
    if n < 3 || n > 4001 {
        return Err(usage(format!("imaging grid of {n} points per axis is out of range [3, 4001]")));
    }
    let pump = FieldMap::gaussian_pump(n, half, im.pump_waist_um, c);
    let spec = QuadratureSpec::kernel().with_target(im.target_rel_err);
    let chain = cfg.optics();
    let phi = steady_state_field(&pump, &cav, &spec)?;
    let img = transmission_image(&phi, &chain)?;
    let mut t = Table::new(&["x_um", "y_um", "intensity"]);
    for j in 0..img.ny {
        for i in 0..img.nx {
            t.push(vec![num(img.x(i)), num(img.y(j)), num(img.at(i, j).re)]);
        }
    }
    let top_down: Vec<f64> = (0..img.ny).rev().flat_map(|j| (0..img.nx).map(move |i| (j, i))).map(|(j, i)| img.at(i, j).re).collect();
    let widths = extract_gaussian_width(&img).ok();
    let estimate = widths.map(|w| {
        greens_width_estimate(
            field_sigma_from_intensity(w.sigma_major),
            chain.psf_sigma,
            im.pump_waist_um / std::f64::consts::SQRT_2,
            chain.magnification,
        )
        .map_err(|e| e.to_string())
    });
    let doc = json!({
        "grid_points": n,
        "half_extent_um": half,
        "kernel_hwhm_um": hwhm,
        "camera_fit": widths,
        "estimate": estimate.as_ref().and_then(|e| e.as_ref().ok()),
        "estimate_error": estimate.as_ref().and_then(|e| e.as_ref().err()),
    });
    run.add(&a.common.out, Artifact::Csv(t));
    run.add(&sibling(&a.common.out, &a.pgm, "pgm"), Artifact::Pgm { width: img.nx, height: img.ny, data: top_down });
    run.add(&sibling(&a.common.out, &a.widths, "json"), Artifact::Json(doc));
    run.finish()
}

pub fn dynamics(a: DynamicsArgs) -> Result<()> {
    let mut run = Run::start("dynamics", &a.common, json!({}))?;
    let cfg = &run.cfg;
    let d = &cfg.dynamics;
    let (cloud, cav, delta_a) = (cfg.cloud().with_atoms(d.n_atoms), cfg.cavity(), cfg.delta_a());
    let kernel_omega_c = cavity_kit::threshold::critical_pump(&cloud, &cav, &cfg.pump(), &ThresholdOptions::default())?.omega_c;
    let model = DynamicsModel::new(&cloud, &cav, delta_a, d.n_max)?;
    // The ramp is scaled to the threshold of the simulated mode set.
    let omega_c = model.critical_pump(&cloud, &cav)?.omega_c;
    let trunc = truncation_change(&cloud, &cav, delta_a, d.n_max)?;
    if trunc > 0.05 {
        log::warn!("flux changes by {:.1}% when n_max grows by four; raise [dynamics] n_max", 100.0 * trunc);
    }
    let onset_flux = {
        let mut s = MeanFieldState::normal(model.n_modes());
        s.psi_f = Complex64::new(d.onset_amplitude, 0.0);
        s.alphas = adiabatic_mode_amplitudes(&model, &s, omega_c)?;
        s.flux(model.kappa)
    };
    let ramp = RampProtocol::linear(d.omega_final_over_omega_c * omega_c, d.ramp_duration_us).with_seed(d.seed_amplitude);
    ramp.validate().map_err(|e| usage(format!("[dynamics]: {e}")))?;
    let state0 = MeanFieldState::seeded(model.n_modes(), d.seed_amplitude);
    let iopts = IntegratorOptions { tol: d.tol, sample_dt: d.sample_dt_us, ..IntegratorOptions::default() };
    let traj = integrate(&state0, &model, &ramp, &iopts)?;
    let onset = detect_onset(&traj, onset_flux).ok();
    let fluxes = traj.fluxes();
    let mut t = Table::new(&["t_us", "psi_f_sq", "psi_b_sq", "flux_proxy", "omega_t_MHz"]);
    for ((s, f), om) in traj.samples.iter().zip(&fluxes).zip(&traj.omegas) {
        t.push(vec![num(s.time), num(s.psi_f.norm_sqr()), num(s.psi_b.norm_sqr()), num(*f), num(to_mhz(*om))]);
    }
    let norm_drift = traj.samples.iter().map(|s| (s.atomic_norm() - 1.0).abs()).fold(0.0, f64::max);
    let doc = json!({
        "omega_c_model_MHz": to_mhz(omega_c),
        "omega_c_kernel_MHz": to_mhz(kernel_omega_c),
        "onset_flux": onset_flux,
        "onset_time_us": onset.map(|o| o.onset_time),
        "onset_omega_MHz": onset.map(|o| to_mhz(o.onset_omega)),
        "onset_over_omega_c": onset.map(|o| o.onset_omega / omega_c),
        "n_modes": model.n_modes(),
        "truncation_change": trunc,
        "max_norm_drift": norm_drift,
        "steps": traj.steps,
        "rejected_steps": traj.rejected,
    });
    run.add(&a.common.out, Artifact::Csv(t));
    run.add(&sibling(&a.common.out, &a.summary, "json"), Artifact::Json(doc));
    if let Some(svg) = &a.svg {
        let pts = traj.samples.iter().zip(&fluxes).map(|(s, f)| (s.time, *f)).collect();
        run.add(
            svg,
            Artifact::Svg {
                title: "Cavity output along the pump ramp".into(),
                xlabel: "t (us)".into(),
                ylabel: "2 kappa sum |alpha|^2".into(),
                series: vec![Series { name: "flux proxy".into(), points: pts }],
            },
        );
    }
    run.finish()
}
