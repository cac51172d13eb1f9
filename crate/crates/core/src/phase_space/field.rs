use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Uniformly sampled complex field `ψ(r_i)`, `r_i = origin + i·spacing`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field1D {
    pub values: Vec<Complex64>,
    pub spacing: f64,
    pub origin: f64,
}

impl Field1D {
    pub fn new(values: Vec<Complex64>, spacing: f64, origin: f64) -> Result<Self> {
        if values.is_empty() || !(spacing > 0.0) {
            return Err(Error::invalid("field needs at least one sample and positive spacing"));
        }
        Ok(Field1D {
            values,
            spacing,
            origin,
        })
    }

    /// Grid of `n` samples centred on `r = 0`.
    pub fn centered(n: usize, spacing: f64, f: impl Fn(f64) -> Complex64) -> Self {
        let origin = -0.5 * (n as f64 - 1.0) * spacing;
        let values = (0..n).map(|i| f(origin + i as f64 * spacing)).collect();
        Field1D {
            values,
            spacing,
            origin,
        }
    }

    /// `ψ ∝ exp(-(r-r0)²/4σ² + i k0 r)` normalized so that `Σ|ψ|² Δr = 1`.
    pub fn gaussian(n: usize, spacing: f64, sigma: f64, r0: f64, k0: f64) -> Self {
        let mut f = Field1D::centered(n, spacing, |r| {
            Complex64::from_polar((-(r - r0).powi(2) / (4.0 * sigma * sigma)).exp(), k0 * r)
        });
        f.normalize();
        f
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn position(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.spacing
    }

    pub fn normalize(&mut self) {
        let p = self.power();
        if p > 0.0 {
            let s = 1.0 / p.sqrt();
            self.values.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn same_grid(&self, o: &Field1D) -> bool {
        self.values.len() == o.values.len()
            && (self.spacing - o.spacing).abs() <= 1e-12 * self.spacing
            && (self.origin - o.origin).abs() <= 1e-12 * self.spacing.max(self.origin.abs())
    }

    /// Parses rows of `r re [im]`; rows must be uniformly spaced.
    pub fn parse(text: &str, origin_name: &Path) -> Result<Self> {
        let rows = crate::spectral::spectrum::parse_table(text, origin_name)?;
        if rows.len() < 2 {
            return Err(Error::Parse {
                path: origin_name.to_path_buf(),
                line: 1,
                msg: "a field needs at least two samples".into(),
            });
        }
        let spacing = rows[1].0 - rows[0].0;
        for (i, w) in rows.windows(2).enumerate() {
            if ((w[1].0 - w[0].0) - spacing).abs() > 1e-6 * spacing.abs() {
                return Err(Error::Parse {
                    path: origin_name.to_path_buf(),
                    line: i + 2,
                    msg: "samples are not uniformly spaced".into(),
                });
            }
        }
        let values = rows
            .iter()
            .map(|&(_, re, im)| Complex64::new(re, im.unwrap_or(0.0)))
            .collect();
        Field1D::new(values, spacing, rows[0].0)
    }
}

/// Cross-spectral density `C[i][j] = ⟨ψ(r_i) ψ*(r_j)⟩`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CsdMatrix {
    pub n: usize,
    pub c: Vec<Complex64>,
    pub spacing: f64,
    pub origin: f64,
}

impl CsdMatrix {
    pub fn zeros(n: usize, spacing: f64, origin: f64) -> Self {
        CsdMatrix {
            n,
            c: vec![Complex64::new(0.0, 0.0); n * n],
            spacing,
            origin,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.c[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.c[i * self.n + j] = v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i).re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn max_hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Positive semidefinite up to `tol·trace`, tested by a Cholesky
    /// factorization of `C + tol·trace·I`.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        let n = self.n;
        let shift = tol * self.trace().abs().max(f64::MIN_POSITIVE);
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut d = self.get(j, j).re + shift;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if !(d > 0.0) {
                return false;
            }
            let djj = d.sqrt();
            l[j * n + j] = Complex64::new(djj, 0.0);
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / djj;
            }
        }
        true
    }

    pub fn max_abs_diff(&self, o: &CsdMatrix) -> f64 {
        self.c.iter().zip(&o.c).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

pub fn csd_from_ensemble(realizations: &[Field1D]) -> Result<CsdMatrix> {
    let first = realizations
        .first()
        .ok_or_else(|| Error::invalid("ensemble needs at least one realization"))?;
    let n = first.len();
    let mut csd = CsdMatrix::zeros(n, first.spacing, first.origin);
    for f in realizations {
        if !f.same_grid(first) {
            return Err(Error::GridMismatch(format!(
                "realization with {} samples at spacing {} does not match {} samples at spacing {}",
                f.len(),
                f.spacing,
                n,
                first.spacing
            )));
        }
        for i in 0..n {
            let a = f.values[i];
            for j in 0..n {
                csd.c[i * n + j] += a * f.values[j].conj();
            }
        }
    }
    let inv = 1.0 / realizations.len() as f64;
    csd.c.iter_mut().for_each(|v| *v *= inv);
    Ok(csd)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Uncertainty {
    pub sigma_r: f64,
    pub sigma_k: f64,
    pub product: f64,
}

/// Standard deviations of `|ψ|²` over `r` and of `|ψ̃|²` over the discrete
/// Fourier-conjugate wavenumbers.
pub fn uncertainty_product(f: &Field1D) -> Result<Uncertainty> {
    let n = f.len();
    let intensity: Vec<f64> = f.values.iter().map(|v| v.norm_sqr()).collect();
    let sigma_r = std_dev(&intensity, |i| f.position(i)).ok_or(Error::ZeroField)?;

    let mut spec = f.values.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut spec);
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * f.spacing);
    // Wrap FFT bins to signed frequencies so the spectrum is contiguous.
    let half = n / 2;
    let mut shifted = vec![0.0; n];
    for (j, v) in spec.iter().enumerate() {
        shifted[(j + half) % n] = v.norm_sqr();
    }
    let sigma_k = std_dev(&shifted, |j| (j as f64 - half as f64) * dk).ok_or(Error::ZeroField)?;
    Ok(Uncertainty {
        sigma_r,
        sigma_k,
        product: sigma_r * sigma_k,
    })
}

fn std_dev(weights: &[f64], x: impl Fn(usize) -> f64) -> Option<f64> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mean = weights.iter().enumerate().map(|(i, w)| w * x(i)).sum::<f64>() / total;
    let var = weights
        .iter()
        .enumerate()
        .map(|(i, w)| w * (x(i) - mean).powi(2))
        .sum::<f64>()
        / total;
    Some(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn plane_wave_csd_is_fully_coherent() {
        let k = 3.0;
        let f = Field1D::centered(32, 0.1, |r| Complex64::from_polar(1.0, k * r));
        let c = csd_from_ensemble(&[f.clone()]).unwrap();
        for i in 0..32 {
            for j in 0..32 {
                let expect = Complex64::from_polar(1.0, k * (f.position(i) - f.position(j)));
                assert!((c.get(i, j) - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn random_phases_decorrelate() {
        let mut rng = rand_pcg::Pcg64Mcg::seed_from_u64(7);
        let (k1, k2) = (2.0, -3.0);
        let fields: Vec<Field1D> = (0..10_000)
            .map(|_| {
                let p1: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
                let p2: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
                Field1D::centered(8, 0.37, |r| {
                    (Complex64::from_polar(1.0, k1 * r + p1) + Complex64::from_polar(1.0, k2 * r + p2)) / 2f64.sqrt()
                })
            })
            .collect();
        let c = csd_from_ensemble(&fields).unwrap();
        // The residual correlation is the incoherent sum of the two waves;
        // subtract it to isolate the cross terms that must average out.
        let f0 = &fields[0];
        for i in 0..8 {
            for j in 0..8 {
                let dr = f0.position(i) - f0.position(j);
                let incoherent = (Complex64::from_polar(1.0, k1 * dr) + Complex64::from_polar(1.0, k2 * dr)) * 0.5;
                assert!((c.get(i, j) - incoherent).norm() < 3.0 / 100.0);
            }
        }
    }

    #[test]
    fn single_realization_is_rank_one() {
        let f = Field1D::gaussian(16, 0.2, 0.5, 0.1, 1.0);
        let c = csd_from_ensemble(&[f]).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let lhs = c.get(i, j).norm_sqr();
                let rhs = c.get(i, i).re * c.get(j, j).re;
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
        assert!(c.is_positive_semidefinite(1e-9));
        assert!(c.max_hermitian_defect() < 1e-15);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = Field1D::gaussian(16, 0.2, 0.5, 0.0, 0.0);
        let b = Field1D::gaussian(17, 0.2, 0.5, 0.0, 0.0);
        assert!(matches!(csd_from_ensemble(&[a, b]), Err(Error::GridMismatch(_))));
        assert!(csd_from_ensemble(&[]).is_err());
    }

    #[test]
    fn gaussian_is_minimum_uncertainty() {
        let f = Field1D::gaussian(512, 0.05, 1.0, 0.0, 0.0);
        let u = uncertainty_product(&f).unwrap();
        assert!((u.product - 0.5).abs() < 1e-4, "{u:?}");
    }

    #[test]
    fn chirp_raises_product() {
        let (sigma, beta) = (1.0, 0.3);
        let mut f = Field1D::centered(1024, 0.04, |r| {
            Complex64::from_polar((-r * r / (4.0 * sigma * sigma)).exp(), beta * r * r)
        });
        f.normalize();
        let u = uncertainty_product(&f).unwrap();
        let expected = 0.5 * (1.0 + 16.0 * beta * beta * sigma.powi(4)).sqrt();
        assert!(u.product > 0.5);
        assert!(
            (u.product - expected).abs() < 1e-3 * expected,
            "{} vs {}",
            u.product,
            expected
        );
    }

    #[test]
    fn narrower_field_wider_spectrum() {
        let a = uncertainty_product(&Field1D::gaussian(512, 0.05, 1.0, 0.0, 0.0)).unwrap();
        let b = uncertainty_product(&Field1D::gaussian(512, 0.05, 0.5, 0.0, 0.0)).unwrap();
        assert!(b.sigma_k >= 2.0 * a.sigma_k * (1.0 - 1e-4));
    }

    #[test]
    fn zero_field_errors() {
        let f = Field1D::centered(8, 1.0, |_| Complex64::new(0.0, 0.0));
        assert!(matches!(uncertainty_product(&f), Err(Error::ZeroField)));
    }

    #[test]
    fn parses_field_text() {
        let f = Field1D::parse("# r re im\n0 1 0\n0.5 0 1\n1.0 2\n", Path::new("f.txt")).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.values[1], Complex64::new(0.0, 1.0));
        assert!(Field1D::parse("0 1\n1 1\n3 1\n", Path::new("g.txt")).is_err());
    }
}
