//! `cavity-kit`: command-line front end for the multimode cavity toolkit.

mod commands;
mod config;
mod dataset;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

const FORMATS: &str = "\
Configuration (TOML, or JSON when the file ends in .json); every key is optional:
  seed = 0
  [cavity]   kind (confocal|single_mode), w0_um, kappa_over_2pi_MHz, epsilon_over_2pi_MHz,
             alpha, delta_c_over_2pi_MHz, delta_0_over_2pi_MHz, g0_over_2pi_MHz,
             wavelength_um, n_max
  [cloud]    tf_radii_um = [x, y, z], tf_to_gauss_ratio, n_atoms, center_um = [x, y],
             sigma_x_um, sigma_y_um (override the radii), point_particle
  [pump]     delta_a_over_2pi_MHz
  [imaging]  pump_waist_um, pump_center_um, magnification, psf_sigma_um, grid_points,
             half_extent_um, target_rel_err
  [dynamics] n_max, n_atoms, ramp_duration_us, omega_final_over_omega_c, seed_amplitude, tol,
             sample_dt_us, onset_amplitude
  [fit]      init_epsilon_over_2pi_MHz, init_alpha, init_delta_0_over_2pi_MHz, init_amplitude,
             truth_epsilon_over_2pi_MHz, truth_alpha, truth_delta_0_over_2pi_MHz, noise_rel,
             resamples

Outputs (frequencies are cyclic, Omega/2pi):
  modes           l,m,n,weight_re,weight_im,midplane_overlap
  greens-map      x_um,y_um,re_D,im_D,method,rel_err_est
  coop-curve      detuning_MHz,ratio_quadrature,ratio_closed_form,c_mm
  threshold-scan  detuning_MHz|x_um,status,omega_c_MHz,omega_c_sq_norm_MHz2,enhancement_re,
                  dispersive_re,e_dw_kHz   (status: ok, no_threshold, invalid, error)
  fit             JSON fit result; dataset CSV
                  kind,x_value_MHz_or_um,omega_c_sq_MHz2,n_atoms,sigma_x_um,sigma_y_um,
                  delta_c_MHz,amplitude_index[,center_y_um,e_dw_MHz,weight]
  bootstrap       JSON summary; replica CSV replica,status,epsilon_MHz,alpha,delta_0_MHz,chi2
  deconvolve      JSON Voigt decomposition
  image           x_um,y_um,intensity (camera plane) + 16-bit PGM + JSON widths
  dynamics        t_us,psi_f_sq,psi_b_sq,flux_proxy,omega_t_MHz + JSON summary
Every run writes <out>.manifest.json next to its primary output.

Exit codes: 0 success, 1 domain error, 2 usage error (no files written).
CAVITY_KIT_THREADS caps the worker count.";

#[derive(Debug, Parser)]
#[command(name = "cavity-kit", version, about = "Multimode confocal cavity QED toolkit", after_help = FORMATS)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct Common {
    /// Configuration file (TOML or JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Primary output file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mode table with weights and midplane overlaps.
    Modes(ModesArgs),
    /// Green's function D(r, r') on a grid of r around a fixed source.
    GreensMap(GreensMapArgs),
    /// Cooperativity enhancement versus detuning.
    CoopCurve(CoopArgs),
    /// Critical pump strength versus detuning or cloud position.
    ThresholdScan(ScanArgs),
    /// Global fit of threshold datasets.
    Fit(FitArgs),
    /// Resampling error analysis of the global fit.
    Bootstrap(BootstrapArgs),
    /// Voigt deconvolution of a position-scan interaction profile.
    Deconvolve(DeconvolveArgs),
    /// Simulated camera image of the longitudinally pumped cavity.
    Image(ImageArgs),
    /// Mean-field dynamics along a linear pump ramp.
    Dynamics(DynamicsArgs),
}

#[derive(Debug, Args)]
pub struct ModesArgs {
    #[command(flatten)]
    pub common: Common,
    /// Largest mode order l + m.
    #[arg(long, default_value_t = 40)]
    pub n_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
pub enum GreensMethod {
    Quadrature,
    ModeSum,
}

#[derive(Debug, Args)]
pub struct GreensMapArgs {
    #[command(flatten)]
    pub common: Common,
    /// Source position r' as x,y (um).
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "0,0")]
    pub source_um: [f64; 2],
    /// Half width of the square grid of r (um).
    #[arg(long, default_value_t = 10.0)]
    pub half_extent_um: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 41)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = GreensMethod::Quadrature)]
    pub method: GreensMethod,
}

#[derive(Debug, Args)]
pub struct CoopArgs {
    #[command(flatten)]
    pub common: Common,
    /// Detunings Delta_C/2pi in MHz: start:stop:step or a comma list.
    #[arg(long, value_parser = parse_values, allow_hyphen_values = true, default_value = "-80:-320:20")]
    pub detunings: Values,
    /// Optional SVG plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
pub enum ScanMode {
    Detuning,
    Position,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub mode: ScanMode,
    /// Detunings Delta_C/2pi in MHz (detuning mode).
    #[arg(long, value_parser = parse_values, allow_hyphen_values = true, default_value = "-40:-320:20")]
    pub detunings: Values,
    /// Cloud x positions in um (position mode).
    #[arg(long, value_parser = parse_values, allow_hyphen_values = true, default_value = "-10:10:1")]
    pub positions: Values,
    /// Include only the first-order kernel term.
    #[arg(long)]
    pub first_order: bool,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args, serde::Serialize)]
#[group(required = true, multiple = false)]
pub struct DataSource {
    /// Dataset CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Synthesize the built-in 8 + 18 scan design from the [fit] truth.
    #[arg(long)]
    pub synthetic: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: DataSource,
    /// Also write the (synthesized) dataset CSV here.
    #[arg(long)]
    pub data_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub source: DataSource,
    /// Number of resamples (default: [fit] resamples).
    #[arg(long)]
    pub resamples: Option<usize>,
    /// Per-replica CSV.
    #[arg(long)]
    pub replicas_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DeconvolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dataset CSV; the first position scan is used.
    #[arg(long, conflicts_with = "simulate")]
    pub scan: Option<PathBuf>,
    /// Forward-simulate a position scan from the configuration.
    #[arg(long)]
    pub simulate: bool,
    /// Cloud x positions for --simulate (um).
    #[arg(long, value_parser = parse_values, allow_hyphen_values = true, default_value = "-10:10:0.25")]
    pub positions: Values,
    /// Cloud Gaussian sigma along x (um); default from the scan or [cloud].
    #[arg(long)]
    pub sigma_cloud_um: Option<f64>,
    /// Re-center the profile with an offset Gaussian fit first.
    #[arg(long)]
    pub center: bool,
}

#[derive(Debug, Args)]
pub struct ImageArgs {
    #[command(flatten)]
    pub common: Common,
    /// 16-bit PGM (default: --out with extension .pgm).
    #[arg(long)]
    pub pgm: Option<PathBuf>,
    /// Width fit and inversion JSON (default: --out with extension .json).
    #[arg(long)]
    pub widths: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Summary JSON (default: --out with extension .json).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

/// Parsed list of values from `a:b:step` or `v1,v2,...`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Values(pub Vec<f64>);

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<&str> = s.split(',').collect();
    if v.len() != 2 {
        return Err("expected x,y".into());
    }
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok([p(v[0])?, p(v[1])?])
}

fn parse_values(s: &str) -> Result<Values, String> {
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    let v = match parts.len() {
        1 => s.split(',').map(p).collect::<Result<Vec<_>, _>>()?,
        3 => {
            let (a, b, step) = (p(parts[0])?, p(parts[1])?, p(parts[2])?.abs());
            if !(step > 0.0) || !a.is_finite() || !b.is_finite() {
                return Err("range needs finite ends and a non-zero step".into());
            }
            let n = ((b - a).abs() / step + 1e-9).floor() as usize;
            if n > 1_000_000 {
                return Err("range has too many points".into());
            }
            let dir = if b >= a { 1.0 } else { -1.0 };
            (0..=n).map(|k| a + dir * step * k as f64).collect()
        }
        _ => return Err("expected start:stop:step or a comma-separated list".into()),
    };
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err("values must be finite".into());
    }
    Ok(Values(v))
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("CAVITY_KIT_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("CAVITY_KIT_THREADS={v:?} is not a positive integer"))?;
    if n == 0 {
        return Err("CAVITY_KIT_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            if usage {
                eprintln!("\nRun `cavity-kit --help` for the configuration and file schemas.");
                return ExitCode::from(2);
            }
            return ExitCode::SUCCESS;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Modes(a) => commands::modes(a),
        Command::GreensMap(a) => commands::greens_map(a),
        Command::CoopCurve(a) => commands::coop_curve(a),
        Command::ThresholdScan(a) => commands::threshold_scan(a),
        Command::Fit(a) => commands::fit(a),
        Command::Bootstrap(a) => commands::bootstrap(a),
        Command::Deconvolve(a) => commands::deconvolve(a),
        Command::Image(a) => commands::image(a),
        Command::Dynamics(a) => commands::dynamics(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<commands::UsageError>().is_some() {
                eprintln!("\nRun `cavity-kit --help` for the configuration and file schemas.");
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
