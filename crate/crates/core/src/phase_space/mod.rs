//! One-dimensional phase-space toolkit: sampled wave functions, their
//! cross-spectral densities and Wigner distributions, free-space transport,
//! Husimi smoothing and decomposition into Gaussian phase-space cells.
//!
//! Nothing in the renderer depends on this module; it exists to check the
//! transport model numerically on small grids.

mod decompose;
mod field;
mod husimi;
mod nnls;
mod wdf;

pub use decompose::{decompose_into_rays, Decomposition};
pub use field::{csd_from_ensemble, uncertainty_product, CsdMatrix, Field1D, Uncertainty};
pub use husimi::husimi_smooth;
pub use nnls::nnls_gram;
pub use wdf::{csd_from_wdf, intensity_marginal, propagate_free_space, wdf_from_csd, WdfGrid};

/// A Gaussian cell in phase space: the footprint of one generalized ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPhasePoint {
    pub mean_r: f64,
    pub mean_k: f64,
    pub sigma_r: f64,
    pub sigma_k: f64,
    pub weight: f64,
}

impl GaussianPhasePoint {
    /// Minimum-uncertainty cell of spatial width `sigma_r`.
    pub fn minimum_uncertainty(mean_r: f64, mean_k: f64, sigma_r: f64, weight: f64) -> Self {
        GaussianPhasePoint {
            mean_r,
            mean_k,
            sigma_r,
            sigma_k: 0.5 / sigma_r,
            weight,
        }
    }

    pub fn is_minimum_uncertainty(&self, rel_tol: f64) -> bool {
        (self.sigma_r * self.sigma_k - 0.5).abs() <= 0.5 * rel_tol
    }

    /// Normalized phase-space density of this cell (unit integral times `weight`).
    pub fn density(&self, r: f64, k: f64) -> f64 {
        let x = (r - self.mean_r) / self.sigma_r;
        let y = (k - self.mean_k) / self.sigma_k;
        self.weight * (-0.5 * (x * x + y * y)).exp() / (2.0 * std::f64::consts::PI * self.sigma_r * self.sigma_k)
    }
}
