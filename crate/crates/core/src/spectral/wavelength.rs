//! Hero-wavelength sampling.

pub const LAMBDA_MIN: f64 = 380.0;
pub const LAMBDA_MAX: f64 = 700.0;
pub const LAMBDA_RANGE: f64 = LAMBDA_MAX - LAMBDA_MIN;

/// Maximum number of wavelengths carried by a single path.
pub const MAX_WAVELENGTHS: usize = 4;

/// Uniform draw over the visible range; returns `(λ nm, pdf 1/nm)`.
pub fn sample_hero_wavelength(u: f64) -> (f64, f64) {
    (LAMBDA_MIN + LAMBDA_RANGE * u, 1.0 / LAMBDA_RANGE)
}

pub fn in_visible_range(l: f64) -> bool {
    (LAMBDA_MIN..=LAMBDA_MAX).contains(&l)
}

/// The hero wavelength plus up to three secondaries drawn from an emission
/// spectrum. `pdfs[i]` is the density that generated `lambdas[i]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WavelengthSet {
    lambdas: [f64; MAX_WAVELENGTHS],
    pdfs: [f64; MAX_WAVELENGTHS],
    len: usize,
}

impl WavelengthSet {
    pub fn hero_only(lambda: f64, pdf: f64) -> Self {
        debug_assert!(in_visible_range(lambda) && pdf > 0.0);
        WavelengthSet {
            lambdas: [lambda, 0.0, 0.0, 0.0],
            pdfs: [pdf, 0.0, 0.0, 0.0],
            len: 1,
        }
    }

    pub fn push_secondary(&mut self, lambda: f64, pdf: f64) {
        assert!(self.len < MAX_WAVELENGTHS, "wavelength set is full");
        debug_assert!(in_visible_range(lambda) && pdf > 0.0);
        self.lambdas[self.len] = lambda;
        self.pdfs[self.len] = pdf;
        self.len += 1;
    }

    /// Removes all secondaries, e.g. after a dispersive delta segment.
    pub fn drop_secondaries(&mut self) {
        self.len = 1;
    }

    pub fn hero(&self) -> f64 {
        self.lambdas[0]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas[..self.len]
    }

    pub fn pdfs(&self) -> &[f64] {
        &self.pdfs[..self.len]
    }

    pub fn has_secondaries(&self) -> bool {
        self.len > 1
    }
}
