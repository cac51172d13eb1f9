use super::{GaussianPhasePoint, WdfGrid};
use crate::error::{Error, Result};

/// Convolves `w` with the normalized Gaussian cell of widths
/// `(cell.sigma_r, cell.sigma_k)`. The cell must be minimum-uncertainty.
pub fn husimi_smooth(w: &WdfGrid, cell: &GaussianPhasePoint) -> Result<WdfGrid> {
    if !cell.is_minimum_uncertainty(1e-9) {
        return Err(Error::invalid(format!(
            "smoothing cell must satisfy sigma_r*sigma_k = 1/2, got {}",
            cell.sigma_r * cell.sigma_k
        )));
    }
    let rows = w.rows();
    let cols = w.cols();
    let kr = kernel(cell.sigma_r, w.dr());
    let kk = kernel(cell.sigma_k, w.dk());

    let mut tmp = vec![0.0; rows * cols];
    for c in 0..rows {
        let src = &w.w[c * cols..(c + 1) * cols];
        convolve(src, &kk, &mut tmp[c * cols..(c + 1) * cols]);
    }
    let mut out = WdfGrid {
        w: vec![0.0; rows * cols],
        ..w.clone()
    };
    let mut col = vec![0.0; rows];
    let mut res = vec![0.0; rows];
    for j in 0..cols {
        for c in 0..rows {
            col[c] = tmp[c * cols + j];
        }
        convolve(&col, &kr, &mut res);
        for c in 0..rows {
            out.w[c * cols + j] = res[c];
        }
    }
    Ok(out)
}

/// Sampled 1-D Gaussian of std `sigma` at spacing `h`, normalized as a
/// density (weights times `h` sum to one over the untruncated support).
fn kernel(sigma: f64, h: f64) -> Vec<f64> {
    let half = (10.0 * sigma / h).ceil() as i64;
    let norm = h / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    (-half..=half)
        .map(|i| norm * (-0.5 * (i as f64 * h / sigma).powi(2)).exp())
        .collect()
}

fn convolve(src: &[f64], k: &[f64], dst: &mut [f64]) {
    let n = src.len() as i64;
    let half = (k.len() / 2) as i64;
    for (i, d) in dst.iter_mut().enumerate() {
        let i = i as i64;
        let lo = (i - half).max(0);
        let hi = (i + half).min(n - 1);
        let mut s = 0.0;
        for t in lo..=hi {
            s += src[t as usize] * k[(t - i + half) as usize];
        }
        *d = s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{csd_from_ensemble, wdf_from_csd, Field1D};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn two_point(n: usize, dr: f64) -> WdfGrid {
        let f = Field1D::centered(n, dr, |r| {
            let g = |x: f64| (-(x * x) / (4.0 * 0.1f64.powi(2))).exp();
            Complex64::new(g(r - 0.8) + g(r + 0.8), 0.0)
        });
        wdf_from_csd(&csd_from_ensemble(&[f]).unwrap()).0
    }

    #[test]
    fn smoothing_removes_negativity() {
        let w = two_point(128, 0.05);
        assert!(w.min() < 0.0);
        let cell = GaussianPhasePoint::minimum_uncertainty(0.0, 0.0, 0.3, 1.0);
        let s = husimi_smooth(&w, &cell).unwrap();
        assert!(s.min() >= -1e-9 * s.max(), "{} {}", s.min(), s.max());
    }

    #[test]
    fn gaussian_variances_add() {
        let (n, dr, sigma) = (128, 0.08, 0.6);
        let origin = -0.5 * (n as f64 - 1.0) * dr;
        let w = WdfGrid::from_fn(n, dr, origin, |r, k| {
            (-r * r / (2.0 * sigma * sigma) - 2.0 * sigma * sigma * k * k).exp() / PI
        });
        let cell = GaussianPhasePoint::minimum_uncertainty(0.0, 0.0, 0.5, 1.0);
        let s = husimi_smooth(&w, &cell).unwrap();
        let (vr, vk) = (sigma * sigma + 0.25, 0.25 / (sigma * sigma) + 1.0);
        let norm = 1.0 / (2.0 * PI * (vr * vk).sqrt());
        let mut worst: f64 = 0.0;
        for c in 0..s.rows() {
            for j in 0..n {
                let (r, k) = (s.r(c), s.k(j));
                let e = norm * (-r * r / (2.0 * vr) - k * k / (2.0 * vk)).exp();
                worst = worst.max((s.get(c, j) - e).abs());
            }
        }
        assert!(worst < 1e-6 * s.max(), "{worst}");
    }

    #[test]
    fn rejects_non_minimal_cell_and_keeps_zero() {
        let w = WdfGrid::zeros(16, 0.1, 0.0);
        let bad = GaussianPhasePoint {
            mean_r: 0.0,
            mean_k: 0.0,
            sigma_r: 1.0,
            sigma_k: 1.0,
            weight: 1.0,
        };
        assert!(husimi_smooth(&w, &bad).is_err());
        let ok = GaussianPhasePoint::minimum_uncertainty(0.0, 0.0, 0.2, 1.0);
        assert!(husimi_smooth(&w, &ok).unwrap().w.iter().all(|v| *v == 0.0));
    }
}
