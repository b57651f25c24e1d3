//! Multimode confocal cavity QED toolkit.
//!
//! Green's functions of a near-confocal cavity with linear mode dispersion
//! and an exponential mode cutoff, the cooperativity enhancement they imply,
//! superradiant threshold predictions, global least-squares fitting of
//! threshold data, the all-optical imaging pipeline and a mean-field
//! integrator for the atom-cavity equations of motion.

pub mod cavity_model;
pub mod cooperativity;
pub mod dynamics;
pub mod error;
pub mod fitting;
pub mod greens;
pub mod imaging;
pub mod quadrature;
pub mod special;
pub mod threshold;
pub mod units;

pub use error::{Error, Result};
