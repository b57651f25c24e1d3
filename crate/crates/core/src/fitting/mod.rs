//! Global fitting of threshold scans, bootstrap error analysis, synthetic
//! datasets and resolution extraction.

mod bootstrap;
mod deconvolve;
mod global;
pub mod lm;
mod model;
mod synth;

pub use bootstrap::{bootstrap, bootstrap_with_sampler, replica_sample, BootstrapResult, ParamSummary};
pub use deconvolve::{
    interaction_profile, peak_offset_correction, sampled_hwhm, simulate_position_profile, voigt_deconvolve,
    OffsetCorrection, VoigtDeconvolution,
};
pub use global::{fit_global, Estimate, FitOptions, FitResult};
pub use model::{
    amplitude_count, jacobian, profile_amplitudes, residuals, row_model, FitParams, GlobalParams, ModelContext,
    ScanDataset, ScanKind, ScanPoint,
};
pub use synth::{reference_amplitudes, reference_design, synthesize_dataset, NoiseModel, ScanDesign, TF_TO_GAUSS};
