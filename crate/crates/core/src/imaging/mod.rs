//! Longitudinal-pump steady state, camera optics model, Gaussian width
//! fits and the quadrature-difference width estimate.

mod field;
mod optics;
mod roundtrip;
mod steady;

pub use field::FieldMap;
pub use optics::{
    extract_gaussian_width, field_sigma_from_intensity, gaussian_blur, greens_width_estimate, transmission_image,
    GaussianWidths, OpticsChain, WidthEstimate,
};
pub use roundtrip::{cutoff_limited_cavity, imaging_grid, imaging_round_trip, kernel_hwhm, RoundTrip};
pub use steady::{effective_waist, longitudinal_overlap, overlap_matrix, steady_state_field, steady_state_field_spectral};
