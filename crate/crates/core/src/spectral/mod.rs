//! Wavelength sampling, spectra, refractive indices and colour output.

pub mod cie;
pub mod ior;
pub mod spectrum;
pub mod wavelength;

pub use cie::spectral_accumulate_to_rgb;
pub use ior::{cauchy_ior, RefractiveIndex};
pub use spectrum::{sample_emission_wavelengths, Spectrum, SpectrumSampler};
pub use wavelength::{sample_hero_wavelength, WavelengthSet, LAMBDA_MAX, LAMBDA_MIN, LAMBDA_RANGE};
