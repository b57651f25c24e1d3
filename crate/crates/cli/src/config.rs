//! Run configuration. Every key carries its unit in the name; frequencies are
//! cyclic (`..._over_2pi_MHz`) and converted to rad/us on the way in.

use anyhow::{bail, Context, Result};
use cavity_kit::cavity_model::{CavityKind, CavityParams, CloudParams, PumpParams};
use cavity_kit::fitting::{FitParams, GlobalParams, ModelContext, TF_TO_GAUSS};
use cavity_kit::imaging::OpticsChain;
use cavity_kit::units::{mhz, to_mhz};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Master seed for every random draw of the run.
    pub seed: u64,
    pub cavity: CavitySection,
    pub cloud: CloudSection,
    pub pump: PumpSection,
    pub imaging: ImagingSection,
    pub dynamics: DynamicsSection,
    pub fit: FitSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            cavity: CavitySection::default(),
            cloud: CloudSection::default(),
            pump: PumpSection::default(),
            imaging: ImagingSection::default(),
            dynamics: DynamicsSection::default(),
            fit: FitSection::default(),
        }
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavitySection {
    pub kind: CavityKind,
    pub w0_um: f64,
    pub kappa_over_2pi_MHz: f64,
    pub epsilon_over_2pi_MHz: f64,
    pub alpha: f64,
    pub delta_c_over_2pi_MHz: f64,
    pub delta_0_over_2pi_MHz: f64,
    pub g0_over_2pi_MHz: f64,
    pub wavelength_um: f64,
    /// Truncation for mode sums.
    pub n_max: usize,
}

impl Default for CavitySection {
    fn default() -> Self {
        let c = CavityParams::reference();
        Self {
            kind: c.kind,
            w0_um: c.w0,
            kappa_over_2pi_MHz: to_mhz(c.kappa),
            epsilon_over_2pi_MHz: to_mhz(c.epsilon),
            alpha: c.alpha,
            delta_c_over_2pi_MHz: to_mhz(c.delta_c),
            delta_0_over_2pi_MHz: to_mhz(c.delta_0),
            g0_over_2pi_MHz: to_mhz(c.g0),
            wavelength_um: c.wavelength,
            n_max: c.n_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloudSection {
    /// Thomas-Fermi radii along x, y and the cavity axis.
    pub tf_radii_um: [f64; 3],
    /// Gaussian sigma per Thomas-Fermi radius.
    pub tf_to_gauss_ratio: f64,
    pub n_atoms: f64,
    pub center_um: [f64; 2],
    /// Explicit Gaussian widths; both must be given to override the radii.
    pub sigma_x_um: Option<f64>,
    pub sigma_y_um: Option<f64>,
    /// Treat the cloud as a point particle where a command allows it.
    pub point_particle: bool,
}

impl Default for CloudSection {
    fn default() -> Self {
        Self {
            tf_radii_um: [3.1, 7.6, 5.3],
            tf_to_gauss_ratio: TF_TO_GAUSS,
            n_atoms: 2.3e5,
            center_um: [0.0, 0.0],
            sigma_x_um: None,
            sigma_y_um: None,
            point_particle: false,
        }
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpSection {
    pub delta_a_over_2pi_MHz: f64,
}

impl Default for PumpSection {
    fn default() -> Self {
        Self { delta_a_over_2pi_MHz: -98_000.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImagingSection {
    /// Intensity waist `w_p` of the longitudinal pump, `E ~ exp(-r^2/w_p^2)`.
    pub pump_waist_um: f64,
    pub pump_center_um: [f64; 2],
    pub magnification: f64,
    /// PSF field sigma in the camera plane.
    pub psf_sigma_um: f64,
    /// Grid size and half extent; chosen automatically when absent.
    pub grid_points: Option<usize>,
    pub half_extent_um: Option<f64>,
    pub target_rel_err: f64,
}

impl Default for ImagingSection {
    fn default() -> Self {
        Self {
            pump_waist_um: 2.0,
            pump_center_um: [0.0, 0.0],
            magnification: 0.69,
            psf_sigma_um: 1.0,
            grid_points: None,
            half_extent_um: None,
            target_rel_err: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    /// Mode truncation of the equations of motion (independent of `cavity.n_max`).
    pub n_max: usize,
    /// Atom number of the time-domain run. Atomic frequencies in the
    /// equations of motion grow with N, so large clouds make the system stiff.
    pub n_atoms: f64,
    pub ramp_duration_us: f64,
    /// Final pump strength in units of the predicted threshold.
    pub omega_final_over_omega_c: f64,
    pub seed_amplitude: f64,
    pub tol: f64,
    pub sample_dt_us: f64,
    /// Onset is declared when the photon flux reaches the adiabatic flux of
    /// this scattered amplitude at threshold.
    pub onset_amplitude: f64,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self {
            n_max: 20,
            n_atoms: 100.0,
            ramp_duration_us: 300.0,
            omega_final_over_omega_c: 1.5,
            seed_amplitude: cavity_kit::dynamics::DEFAULT_SEED,
            tol: 1e-8,
            sample_dt_us: 0.5,
            onset_amplitude: 1e-2,
        }
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// Starting point of the optimizer.
    pub init_epsilon_over_2pi_MHz: f64,
    pub init_alpha: f64,
    pub init_delta_0_over_2pi_MHz: f64,
    pub init_amplitude: f64,
    /// Ground truth and noise for `--synthetic` data.
    pub truth_epsilon_over_2pi_MHz: f64,
    pub truth_alpha: f64,
    pub truth_delta_0_over_2pi_MHz: f64,
    pub noise_rel: f64,
    pub resamples: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            init_epsilon_over_2pi_MHz: 2.0,
            init_alpha: 1e-3,
            init_delta_0_over_2pi_MHz: 0.0,
            init_amplitude: 1.5,
            truth_epsilon_over_2pi_MHz: 2.6,
            truth_alpha: 1e-3,
            truth_delta_0_over_2pi_MHz: 0.0,
            noise_rel: 0.03,
            resamples: 300,
        }
    }
}

impl Config {
    /// TOML unless the file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Config = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).with_context(|| format!("parsing JSON config {}", path.display()))?
        } else {
            toml::from_str(&text).with_context(|| format!("parsing TOML config {}", path.display()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cavity().validate().context("[cavity]")?;
        if !self.cloud.point_particle {
            self.cloud().validate().context("[cloud]")?;
        }
        if self.cloud.sigma_x_um.is_some() != self.cloud.sigma_y_um.is_some() {
            bail!("[cloud]: sigma_x_um and sigma_y_um must be given together");
        }
        if !(self.pump.delta_a_over_2pi_MHz.is_finite() && self.pump.delta_a_over_2pi_MHz != 0.0) {
            bail!("[pump]: delta_a_over_2pi_MHz must be finite and non-zero");
        }
        self.optics().validate().context("[imaging]")?;
        if !(self.imaging.pump_waist_um > 0.0) {
            bail!("[imaging]: pump_waist_um must be positive");
        }
        let d = &self.dynamics;
        if !(d.ramp_duration_us > 0.0 && d.tol > 0.0 && d.sample_dt_us > 0.0 && d.omega_final_over_omega_c > 0.0) {
            bail!("[dynamics]: ramp_duration_us, tol, sample_dt_us and omega_final_over_omega_c must be positive");
        }
        if !(d.n_atoms >= 1.0) {
            bail!("[dynamics]: n_atoms must be at least 1");
        }
        if !(d.onset_amplitude > 0.0) {
            bail!("[dynamics]: onset_amplitude must be positive");
        }
        if !(self.fit.noise_rel >= 0.0) {
            bail!("[fit]: noise_rel must be non-negative");
        }
        Ok(())
    }

    pub fn cavity(&self) -> CavityParams {
        let c = &self.cavity;
        CavityParams {
            w0: c.w0_um,
            kappa: mhz(c.kappa_over_2pi_MHz),
            epsilon: mhz(c.epsilon_over_2pi_MHz),
            alpha: c.alpha,
            delta_c: mhz(c.delta_c_over_2pi_MHz),
            delta_0: mhz(c.delta_0_over_2pi_MHz),
            g0: mhz(c.g0_over_2pi_MHz),
            wavelength: c.wavelength_um,
            n_max: c.n_max,
            kind: c.kind,
        }
    }

    pub fn cloud(&self) -> CloudParams {
        let c = &self.cloud;
        match (c.sigma_x_um, c.sigma_y_um) {
            (Some(sx), Some(sy)) => CloudParams::gaussian(c.center_um, sx, sy, c.n_atoms),
            _ => CloudParams::from_tf_radii(c.center_um, c.tf_radii_um, c.n_atoms, c.tf_to_gauss_ratio),
        }
    }

    pub fn delta_a(&self) -> f64 {
        mhz(self.pump.delta_a_over_2pi_MHz)
    }

    pub fn pump(&self) -> PumpParams {
        PumpParams { rabi: 1.0, delta_a: self.delta_a() }
    }

    pub fn optics(&self) -> OpticsChain {
        OpticsChain { magnification: self.imaging.magnification, psf_sigma: self.imaging.psf_sigma_um }
    }

    pub fn model_context(&self) -> ModelContext {
        ModelContext::for_fitting(self.cavity(), self.delta_a())
    }

    pub fn fit_init(&self, n_amplitudes: usize) -> FitParams {
        let f = &self.fit;
        FitParams {
            globals: GlobalParams {
                epsilon: mhz(f.init_epsilon_over_2pi_MHz),
                alpha: f.init_alpha,
                delta_0: mhz(f.init_delta_0_over_2pi_MHz),
            },
            amplitudes: vec![f.init_amplitude; n_amplitudes],
        }
    }

    pub fn fit_truth(&self) -> GlobalParams {
        let f = &self.fit;
        GlobalParams {
            epsilon: mhz(f.truth_epsilon_over_2pi_MHz),
            alpha: f.truth_alpha,
            delta_0: mhz(f.truth_delta_0_over_2pi_MHz),
        }
    }
}
