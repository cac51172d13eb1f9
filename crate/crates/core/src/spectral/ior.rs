use std::path::Path;

use num_complex::Complex64;

use super::spectrum::read_table;
use crate::error::{Error, Result};

/// `A + B/λ²` with `λ` in nm converted to µm and `B` in µm².
pub fn cauchy_ior(lambda_nm: f64, a: f64, b: f64) -> f64 {
    let l_um = lambda_nm * 1e-3;
    a + b / (l_um * l_um)
}

/// Complex refractive index `η + iκ` as a function of wavelength.
#[derive(Clone, Debug, PartialEq)]
pub enum RefractiveIndex {
    Constant(Complex64),
    Cauchy {
        a: f64,
        b: f64,
    },
    /// `(λ nm, η, κ)` rows sorted by wavelength, linearly interpolated.
    Tabulated(Vec<(f64, f64, f64)>),
}

impl RefractiveIndex {
    pub const VACUUM: RefractiveIndex = RefractiveIndex::Constant(Complex64::new(1.0, 0.0));

    pub fn real(n: f64) -> Self {
        RefractiveIndex::Constant(Complex64::new(n, 0.0))
    }

    pub fn cauchy(a: f64, b: f64) -> Result<Self> {
        if b < 0.0 || a <= 0.0 {
            return Err(Error::invalid(format!(
                "Cauchy coefficients must satisfy A > 0, B >= 0 (got {a}, {b})"
            )));
        }
        Ok(RefractiveIndex::Cauchy { a, b })
    }

    pub fn tabulated(mut rows: Vec<(f64, f64, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("tabulated refractive index needs at least one row"));
        }
        if rows.iter().any(|r| !(r.1 > 0.0) || r.2 < 0.0) {
            return Err(Error::invalid("tabulated refractive index needs η > 0 and κ >= 0"));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(RefractiveIndex::Tabulated(rows))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let rows = read_table(path)?;
        Self::tabulated(rows.into_iter().map(|(l, n, k)| (l, n, k.unwrap_or(0.0))).collect())
    }

    pub fn eval(&self, lambda_nm: f64) -> Complex64 {
        match self {
            RefractiveIndex::Constant(c) => *c,
            RefractiveIndex::Cauchy { a, b } => Complex64::new(cauchy_ior(lambda_nm, *a, *b), 0.0),
            RefractiveIndex::Tabulated(rows) => {
                let i = rows.partition_point(|r| r.0 < lambda_nm);
                if i == 0 {
                    return Complex64::new(rows[0].1, rows[0].2);
                }
                if i == rows.len() {
                    let r = rows[rows.len() - 1];
                    return Complex64::new(r.1, r.2);
                }
                let (l0, n0, k0) = rows[i - 1];
                let (l1, n1, k1) = rows[i];
                let t = if l1 > l0 { (lambda_nm - l0) / (l1 - l0) } else { 1.0 };
                Complex64::new(n0 + t * (n1 - n0), k0 + t * (k1 - k0))
            }
        }
    }

    pub fn is_dispersive(&self) -> bool {
        match self {
            RefractiveIndex::Constant(_) => false,
            RefractiveIndex::Cauchy { b, .. } => *b > 0.0,
            RefractiveIndex::Tabulated(rows) => rows.windows(2).any(|w| w[0].1 != w[1].1 || w[0].2 != w[1].2),
        }
    }

    pub fn is_conductor(&self) -> bool {
        match self {
            RefractiveIndex::Constant(c) => c.im > 0.0,
            RefractiveIndex::Cauchy { .. } => false,
            RefractiveIndex::Tabulated(rows) => rows.iter().any(|r| r.2 > 0.0),
        }
    }
}
