//! CIE 1931 2° colour matching functions and XYZ to linear sRGB conversion.
//!
//! The matching functions use the multi-lobe piecewise-Gaussian fit of Wyman,
//! Sloan and Shirley (2013), which tracks the tabulated observer to within
//! about one percent over the visible range.

use super::wavelength::{LAMBDA_MAX, LAMBDA_MIN};

fn lobe(l: f64, mu: f64, s_lo: f64, s_hi: f64) -> f64 {
    let s = if l < mu { s_lo } else { s_hi };
    let t = (l - mu) / s;
    (-0.5 * t * t).exp()
}

pub fn x_bar(l: f64) -> f64 {
    1.056 * lobe(l, 599.8, 37.9, 31.0) + 0.362 * lobe(l, 442.0, 16.0, 26.7) - 0.065 * lobe(l, 501.1, 20.4, 26.2)
}

pub fn y_bar(l: f64) -> f64 {
    0.821 * lobe(l, 568.8, 46.9, 40.5) + 0.286 * lobe(l, 530.9, 16.3, 31.1)
}

pub fn z_bar(l: f64) -> f64 {
    1.217 * lobe(l, 437.0, 11.8, 36.0) + 0.681 * lobe(l, 459.0, 26.0, 13.8)
}

/// `∫ ȳ dλ` over the configured visible range, by composite Simpson.
pub fn y_integral() -> f64 {
    static Y: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *Y.get_or_init(|| {
        let n = 3200;
        let h = (LAMBDA_MAX - LAMBDA_MIN) / n as f64;
        let mut s = y_bar(LAMBDA_MIN) + y_bar(LAMBDA_MAX);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * y_bar(LAMBDA_MIN + i as f64 * h);
        }
        s * h / 3.0
    })
}

pub const XYZ_TO_SRGB: [[f64; 3]; 3] = [
    [3.2404542, -1.5371385, -0.4985314],
    [-0.9692660, 1.8760108, 0.0415560],
    [0.0556434, -0.2040259, 1.0572252],
];

pub fn xyz_to_linear_srgb(xyz: [f64; 3]) -> [f64; 3] {
    let mut rgb = [0.0; 3];
    for (r, row) in rgb.iter_mut().zip(XYZ_TO_SRGB.iter()) {
        *r = row[0] * xyz[0] + row[1] * xyz[1] + row[2] * xyz[2];
    }
    rgb
}

/// Tristimulus contribution of spectral weight `w` at wavelength `l`, normalized
/// so that a constant unit spectrum integrated over the visible range has Y = 1.
pub fn xyz_weight(l: f64, w: f64) -> [f64; 3] {
    let k = w / y_integral();
    [k * x_bar(l), k * y_bar(l), k * z_bar(l)]
}

/// Accumulates `(λ, s0)` samples into XYZ and converts to linear sRGB,
/// clamping negative channels to zero.
pub fn spectral_accumulate_to_rgb(samples: &[(f64, f64)]) -> [f64; 3] {
    let mut xyz = [0.0; 3];
    for &(l, s0) in samples {
        let c = xyz_weight(l, s0);
        for i in 0..3 {
            xyz[i] += c[i];
        }
    }
    let rgb = xyz_to_linear_srgb(xyz);
    rgb.map(|c| c.max(0.0))
}
