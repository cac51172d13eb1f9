use super::{nnls_gram, GaussianPhasePoint, WdfGrid};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// Generalized rays with strictly positive weight, in lattice order.
    pub rays: Vec<GaussianPhasePoint>,
    /// `‖W − Σ Iₙ gₙ‖₂ / ‖W‖₂` over the grid samples.
    pub residual: f64,
}

/// Fits a non-negative (typically Husimi-smoothed) grid with non-negative
/// combinations of generalized rays.
///
/// Each ray is the minimum-uncertainty Gaussian cell
/// `(cell.sigma_r, cell.sigma_k)` with unit phase-space integral. Ray centres lie on a
/// lattice with spacing `(sigma_r, sigma_k)` anchored at the grid centre and
/// `k = 0`. When `n_max` is smaller than the lattice, only the `n_max` cells
/// with the largest smoothed value at their centre take part.
pub fn decompose_into_rays(w: &WdfGrid, cell: &GaussianPhasePoint, n_max: usize) -> Result<Decomposition> {
    if !cell.is_minimum_uncertainty(1e-9) {
        return Err(Error::invalid("decomposition cell must be minimum-uncertainty"));
    }
    let peak = w.max().max(0.0);
    if w.min() < -1e-9 * peak {
        return Err(Error::invalid(format!(
            "decomposition needs a non-negative grid, found minimum {:e}",
            w.min()
        )));
    }
    let norm = w.l2_norm();
    if norm == 0.0 || n_max == 0 {
        return Ok(Decomposition {
            rays: Vec::new(),
            residual: if norm == 0.0 { 0.0 } else { 1.0 },
        });
    }

    let (rows, cols) = (w.rows(), w.cols());
    let r_mid = w.r(rows / 2);
    let lattice_r = lattice(r_mid, cell.sigma_r, w.r(0), w.r(rows - 1));
    let lattice_k = lattice(0.0, cell.sigma_k, w.k(0), w.k(cols - 1));

    let (sr, sk) = (cell.sigma_r, cell.sigma_k);
    // Basis factors sampled on the grid: gr[i][c], gk[j][col].
    let gr: Vec<Vec<f64>> = lattice_r
        .iter()
        .map(|&m| (0..rows).map(|c| gauss(w.r(c) - m, sr)).collect())
        .collect();
    let gk: Vec<Vec<f64>> = lattice_k
        .iter()
        .map(|&m| (0..cols).map(|j| gauss(w.k(j) - m, sk)).collect())
        .collect();

    let mut cells: Vec<(usize, usize)> = (0..lattice_r.len())
        .flat_map(|i| (0..lattice_k.len()).map(move |j| (i, j)))
        .collect();
    if n_max < cells.len() {
        let value = |&(i, j): &(usize, usize)| {
            let c = nearest(lattice_r[i], w.r(0), w.dr(), rows);
            let col = nearest(lattice_k[j], w.k(0), w.dk(), cols);
            w.get(c, col)
        };
        // Stable sort keeps lattice order among equal values.
        cells.sort_by(|a, b| value(b).total_cmp(&value(a)));
        cells.truncate(n_max);
        cells.sort();
    }

    let gram_r = gram(&gr);
    let gram_k = gram(&gk);
    // Projections ⟨W, gr_i ⊗ gk_j⟩ = Σ_c gr_i(c) Σ_col W(c,col) gk_j(col).
    let wk: Vec<Vec<f64>> = (0..rows)
        .map(|c| gk.iter().map(|g| (0..cols).map(|j| w.get(c, j) * g[j]).sum()).collect())
        .collect();
    let p = cells.len();
    let mut b = vec![0.0; p];
    let mut g = vec![0.0; p * p];
    for (a, &(ia, ja)) in cells.iter().enumerate() {
        b[a] = (0..rows).map(|c| gr[ia][c] * wk[c][ja]).sum();
        for (bb, &(ib, jb)) in cells.iter().enumerate() {
            g[a * p + bb] = gram_r[ia][ib] * gram_k[ja][jb];
        }
    }
    let x = nnls_gram(&g, &b, 4 * p + 16);

    // Reconstruct separably: R(c, col) = Σ_i gr_i(c) Σ_j M[i][j] gk_j(col).
    let mut m = vec![vec![0.0; lattice_k.len()]; lattice_r.len()];
    for (a, &(i, j)) in cells.iter().enumerate() {
        m[i][j] = x[a];
    }
    let mk: Vec<Vec<f64>> = m
        .iter()
        .map(|row| {
            (0..cols)
                .map(|col| row.iter().zip(&gk).map(|(v, g)| v * g[col]).sum())
                .collect()
        })
        .collect();
    let mut err2 = 0.0;
    for c in 0..rows {
        for col in 0..cols {
            let recon: f64 = (0..lattice_r.len()).map(|i| gr[i][c] * mk[i][col]).sum();
            err2 += (w.get(c, col) - recon).powi(2);
        }
    }

    let rays = cells
        .iter()
        .zip(&x)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&(i, j), &v)| GaussianPhasePoint {
            mean_r: lattice_r[i],
            mean_k: lattice_k[j],
            sigma_r: cell.sigma_r,
            sigma_k: cell.sigma_k,
            weight: v,
        })
        .collect();
    Ok(Decomposition {
        rays,
        residual: err2.sqrt() / norm,
    })
}

fn lattice(anchor: f64, step: f64, lo: f64, hi: f64) -> Vec<f64> {
    let i0 = ((lo - anchor) / step).ceil() as i64;
    let i1 = ((hi - anchor) / step).floor() as i64;
    (i0..=i1).map(|i| anchor + i as f64 * step).collect()
}

fn gauss(x: f64, s: f64) -> f64 {
    (-0.5 * (x / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
}

fn nearest(x: f64, start: f64, h: f64, len: usize) -> usize {
    (((x - start) / h).round().max(0.0) as usize).min(len - 1)
}

fn gram(f: &[Vec<f64>]) -> Vec<Vec<f64>> {
    f.iter()
        .map(|a| f.iter().map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum()).collect())
        .collect()
}
