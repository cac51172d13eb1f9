use num_complex::Complex64;
use rustfft::FftPlanner;

use super::CsdMatrix;
use crate::error::{Error, Result};

/// Discrete Wigner distribution of an `n`-sample field.
///
/// Rows sit at half-sample positions `r_c = origin + c·Δr/2`, `c = 0..2n-1`,
/// so every pair `(a, b)` of field samples contributes to exactly one row
/// `c = a + b`. Columns are `k_j = (j - n/2)·Δk` with `Δk = π/(n·Δr)`, one
/// full period of the discrete transform. Stored row-major (`rows × n`).
#[derive(Clone, Debug, PartialEq)]
pub struct WdfGrid {
    pub n: usize,
    pub w: Vec<f64>,
    pub spacing: f64,
    pub origin: f64,
}

impl WdfGrid {
    pub fn zeros(n: usize, spacing: f64, origin: f64) -> Self {
        WdfGrid {
            n,
            w: vec![0.0; (2 * n - 1) * n],
            spacing,
            origin,
        }
    }

    /// Samples `f(r, k)` on the grid layout of an `n`-sample field.
    pub fn from_fn(n: usize, spacing: f64, origin: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut g = WdfGrid::zeros(n, spacing, origin);
        for c in 0..g.rows() {
            for j in 0..n {
                g.w[c * n + j] = f(g.r(c), g.k(j));
            }
        }
        g
    }

    pub fn rows(&self) -> usize {
        2 * self.n - 1
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn dr(&self) -> f64 {
        0.5 * self.spacing
    }

    pub fn dk(&self) -> f64 {
        std::f64::consts::PI / (self.n as f64 * self.spacing)
    }

    pub fn r(&self, c: usize) -> f64 {
        self.origin + c as f64 * self.dr()
    }

    pub fn k(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.dk()
    }

    pub fn get(&self, c: usize, j: usize) -> f64 {
        self.w[c * self.n + j]
    }

    /// `∫∫ W dr dk` over all rows.
    pub fn total_integral(&self) -> f64 {
        self.w.iter().sum::<f64>() * self.dr() * self.dk()
    }

    pub fn min(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        self.w.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn same_layout(&self, o: &WdfGrid) -> bool {
        self.n == o.n && self.spacing == o.spacing && self.origin == o.origin
    }
}

/// Index pairs `(m, a, b)` with `a - b = 2m + parity(c)` and `a + b = c`.
fn row_pairs(c: usize, n: usize) -> impl Iterator<Item = (i64, usize, usize)> {
    let c = c as i64;
    let n = n as i64;
    let p = c & 1;
    let d_max = c.min(2 * n - 2 - c);
    (-d_max..=d_max).filter(move |d| (d - p) % 2 == 0).map(move |d| {
        let m = (d - p).div_euclid(2);
        (m, ((c + d) / 2) as usize, ((c - d) / 2) as usize)
    })
}

fn parity_phase(c: usize, j: usize, n: usize) -> Complex64 {
    let p = (c & 1) as f64;
    let arg = -std::f64::consts::PI * p * (j as f64 - (n / 2) as f64) / n as f64;
    Complex64::from_polar(1.0, arg)
}

/// `exp(2πi·m·⌊n/2⌋/n)`, the shift that centres the k axis on zero.
fn centering(m: i64, n: usize) -> Complex64 {
    let h = (n / 2) as f64;
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 * h / n as f64)
}

/// `W(r,k) = (1/2π) ∫ C(r + x/2, r - x/2) e^{-ixk} dx` on the discrete grid.
///
/// Returns the grid and the largest imaginary residue relative to the
/// largest real magnitude.
pub fn wdf_from_csd(csd: &CsdMatrix) -> (WdfGrid, f64) {
    let n = csd.n;
    let mut grid = WdfGrid::zeros(n, csd.spacing, csd.origin);
    let fft = FftPlanner::new().plan_fft_forward(n);
    let scale = csd.spacing / std::f64::consts::PI;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut worst_im: f64 = 0.0;
    for c in 0..grid.rows() {
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (m, a, b) in row_pairs(c, n) {
            buf[m.rem_euclid(n as i64) as usize] = csd.get(a, b) * centering(m, n);
        }
        fft.process(&mut buf);
        for j in 0..n {
            let v = buf[j] * parity_phase(c, j, n) * scale;
            grid.w[c * n + j] = v.re;
            worst_im = worst_im.max(v.im.abs());
        }
    }
    let peak = grid.w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let residue = if peak > 0.0 { worst_im / peak } else { worst_im };
    (grid, residue)
}

/// Inverse of [`wdf_from_csd`].
pub fn csd_from_wdf(w: &WdfGrid) -> CsdMatrix {
    let n = w.n;
    let mut csd = CsdMatrix::zeros(n, w.spacing, w.origin);
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let scale = std::f64::consts::PI / (w.spacing * n as f64);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..w.rows() {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = parity_phase(c, j, n).conj() * w.get(c, j);
        }
        ifft.process(&mut buf);
        for (m, a, b) in row_pairs(c, n) {
            csd.set(
                a,
                b,
                buf[m.rem_euclid(n as i64) as usize] * centering(m, n).conj() * scale,
            );
        }
    }
    csd
}

/// `I(r) = ∫ W(r,k) dk` at the field's own sample positions (even rows).
pub fn intensity_marginal(w: &WdfGrid) -> Vec<(f64, f64)> {
    let dk = w.dk();
    (0..w.n)
        .map(|i| {
            let c = 2 * i;
            let row = &w.w[c * w.n..(c + 1) * w.n];
            (w.r(c), row.iter().sum::<f64>() * dk)
        })
        .collect()
}

/// Paraxial free-space transport over `distance`: each `k` column is
/// sheared along `r` by `distance·k/k0`, with linear interpolation and
/// clamping at the grid edges.
pub fn propagate_free_space(w: &WdfGrid, distance: f64, k0: f64) -> Result<WdfGrid> {
    if !(distance >= 0.0) || !(k0 > 0.0) {
        return Err(Error::invalid("propagation needs distance >= 0 and k0 > 0"));
    }
    let mut out = w.clone();
    if distance == 0.0 {
        return Ok(out);
    }
    let rows = w.rows();
    let last = (rows - 1) as f64;
    for j in 0..w.n {
        let shift = distance * w.k(j) / k0 / w.dr();
        for c in 0..rows {
            let t = (c as f64 - shift).clamp(0.0, last);
            let i0 = t.floor() as usize;
            let i1 = (i0 + 1).min(rows - 1);
            let f = t - i0 as f64;
            out.w[c * w.n + j] = (1.0 - f) * w.get(i0, j) + f * w.get(i1, j);
        }
    }
    Ok(out)
}
