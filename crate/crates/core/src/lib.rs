//! Desk-scale simulator of few-photon linear-optical experiments with
//! explicit temporal-mode distinguishability.
//!
//! The crate models the three-photon GHZ protocol end to end: entangled-pair
//! emission from two down-conversions, creation-operator evolution through
//! beamsplitters and wave plates, fourfold post-selection with polarization
//! analyzers, delay-scan visibility curves, and Monte Carlo coincidence-rate
//! estimates. Inner products are matrix permanents over single-photon
//! overlaps, so bosonic interference and partial distinguishability follow
//! from the state algebra itself.
//!
//! Monte Carlo inner loops (delay-point averaging, pulse batches) are
//! data-parallel via rayon when the default `parallel` feature is enabled;
//! sequential fallbacks produce bit-identical results.

pub mod detection;
pub mod error;
pub(crate) mod exec;
pub mod experiments;
pub mod mode_algebra;
pub mod optical_elements;
pub mod photon_sources;
pub mod rates;

pub use error::{Error, Result};
