//! Hadamard-encoded row-column (TOBE) synthetic aperture imaging with
//! retrospective elevational transmit beamforming.
//!
//! The crate simulates FORCES acquisitions on a row-column array, decodes
//! them into effective single-column transmits, reconstructs images with
//! fixed-focus or virtual-source (RTB) delay-and-sum, and measures the
//! results with FWHM and gCNR.

pub mod beamformer;
pub mod config;
pub mod encoding;
pub mod error;
pub mod formats;
pub mod geometry;
pub mod metrics;
pub mod pipeline;
pub mod simulator;

pub use error::{Error, Result};
