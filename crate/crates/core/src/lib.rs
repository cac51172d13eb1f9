//! Spectral, polarization-aware path tracing with explicit treatment of
//! partial spatial coherence and diffraction.

pub mod bsdf;
pub mod coherence;
pub mod error;
pub mod geometry;
pub mod image;
pub mod math;
pub mod phase_space;
pub mod polarimetry;
pub mod render;
pub mod scene;
pub mod spectral;

pub use error::{Error, Result};
