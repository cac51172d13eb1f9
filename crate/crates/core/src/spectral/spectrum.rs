use std::path::Path;

use super::wavelength::{LAMBDA_MAX, LAMBDA_MIN};
use crate::error::{Error, Result};

/// A non-negative function of wavelength (nm).
#[derive(Clone, Debug, PartialEq)]
pub enum Spectrum {
    Constant(f64),
    /// Planck emitter at `temperature` kelvin, normalized to 1 at its peak
    /// inside the visible range and multiplied by `scale`.
    Blackbody {
        temperature: f64,
        scale: f64,
    },
    /// Linearly interpolated samples, sorted by wavelength; clamps at the ends.
    Tabulated(Vec<(f64, f64)>),
}

const PLANCK_H: f64 = 6.626_070_15e-34;
const BOLTZMANN: f64 = 1.380_649e-23;
const LIGHT_SPEED: f64 = 299_792_458.0;

/// Planck spectral radiance (W·sr⁻¹·m⁻³) at wavelength `l` nm.
pub fn planck(l: f64, temperature: f64) -> f64 {
    let lm = l * 1e-9;
    let c1 = 2.0 * PLANCK_H * LIGHT_SPEED * LIGHT_SPEED;
    let c2 = PLANCK_H * LIGHT_SPEED / BOLTZMANN;
    c1 / (lm.powi(5) * ((c2 / (lm * temperature)).exp_m1()))
}

fn planck_peak_visible(temperature: f64) -> f64 {
    // Wien's displacement law, clamped to the visible range.
    let peak_nm = (2.897_771_955e-3 / temperature * 1e9).clamp(LAMBDA_MIN, LAMBDA_MAX);
    planck(peak_nm, temperature)
}

impl Spectrum {
    pub fn tabulated(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("tabulated spectrum needs at least one sample"));
        }
        if samples
            .iter()
            .any(|&(l, v)| !l.is_finite() || !v.is_finite() || v < 0.0)
        {
            return Err(Error::invalid(
                "tabulated spectrum values must be finite and non-negative",
            ));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Spectrum::Tabulated(samples))
    }

    pub fn eval(&self, l: f64) -> f64 {
        match self {
            Spectrum::Constant(v) => *v,
            Spectrum::Blackbody { temperature, scale } => {
                scale * planck(l, *temperature) / planck_peak_visible(*temperature)
            }
            Spectrum::Tabulated(s) => interpolate(s, l),
        }
    }

    /// Mean value over the visible range (1 nm midpoint rule).
    pub fn mean_visible(&self) -> f64 {
        let n = (LAMBDA_MAX - LAMBDA_MIN) as usize;
        (0..n).map(|i| self.eval(LAMBDA_MIN + i as f64 + 0.5)).sum::<f64>() / n as f64
    }

    pub fn load(path: &Path) -> Result<Self> {
        let rows = read_table(path)?;
        Spectrum::tabulated(rows.into_iter().map(|r| (r.0, r.1)).collect())
    }
}

pub(crate) fn interpolate(s: &[(f64, f64)], l: f64) -> f64 {
    let i = s.partition_point(|p| p.0 < l);
    if i == 0 {
        return s[0].1;
    }
    if i == s.len() {
        return s[s.len() - 1].1;
    }
    let (l0, v0) = s[i - 1];
    let (l1, v1) = s[i];
    if l1 == l0 {
        return v1;
    }
    let t = (l - l0) / (l1 - l0);
    v0 + t * (v1 - v0)
}

/// One row of a spectral table: `λ_nm value [value2]`.
pub type TableRow = (f64, f64, Option<f64>);

/// Parses the whitespace-delimited spectral table format. `#` starts a comment.
pub fn parse_table(text: &str, origin: &Path) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            msg,
        };
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| err(format!("not a number: `{t}`"))))
            .collect::<Result<_>>()?;
        match nums.as_slice() {
            [l, v] => rows.push((*l, *v, None)),
            [l, v, w] => rows.push((*l, *v, Some(*w))),
            _ => return Err(err(format!("expected 2 or 3 columns, found {}", nums.len()))),
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(rows)
}

pub fn read_table(path: &Path) -> Result<Vec<TableRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(&text, path)
}

/// Piecewise-constant discretization of a spectrum at 1 nm, for inverse-CDF
/// wavelength sampling. Bin `i` covers `[380 + i, 381 + i)` nm and carries the
/// spectrum value at its centre.
#[derive(Clone, Debug)]
pub struct SpectrumSampler {
    cdf: Vec<f64>,
    density: Vec<f64>,
}

impl SpectrumSampler {
    pub const BIN_WIDTH: f64 = 1.0;

    pub fn new(spectrum: &Spectrum) -> Result<Self> {
        let n = ((LAMBDA_MAX - LAMBDA_MIN) / Self::BIN_WIDTH) as usize;
        let values: Vec<f64> = (0..n)
            .map(|i| spectrum.eval(LAMBDA_MIN + (i as f64 + 0.5) * Self::BIN_WIDTH).max(0.0))
            .collect();
        let total: f64 = values.iter().sum::<f64>() * Self::BIN_WIDTH;
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateSpectrum);
        }
        let density: Vec<f64> = values.iter().map(|v| v / total).collect();
        let mut cdf = Vec::with_capacity(n + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for d in &density {
            acc += d * Self::BIN_WIDTH;
            cdf.push(acc);
        }
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        Ok(SpectrumSampler { cdf, density })
    }

    /// Density (1/nm) of the discretized distribution at `l`.
    pub fn pdf(&self, l: f64) -> f64 {
        if !(LAMBDA_MIN..LAMBDA_MAX).contains(&l) {
            return if l == LAMBDA_MAX {
                *self.density.last().unwrap()
            } else {
                0.0
            };
        }
        self.density[((l - LAMBDA_MIN) / Self::BIN_WIDTH) as usize]
    }

    pub fn sample(&self, u: f64) -> (f64, f64) {
        let i = (self.cdf.partition_point(|&c| c <= u).max(1) - 1).min(self.density.len() - 1);
        // Skip empty bins that share a CDF value.
        let mut i = i;
        while self.density[i] == 0.0 && i + 1 < self.density.len() {
            i += 1;
        }
        let lo = self.cdf[i];
        let width = self.cdf[i + 1] - lo;
        let t = if width > 0.0 {
            ((u - lo) / width).clamp(0.0, 1.0 - 1e-12)
        } else {
            0.5
        };
        let l = LAMBDA_MIN + (i as f64 + t) * Self::BIN_WIDTH;
        (l, self.density[i])
    }

    pub fn bins(&self) -> &[f64] {
        &self.density
    }
}

/// Draws three wavelengths from `e` by inverse CDF over its 1 nm discretization.
pub fn sample_emission_wavelengths(e: &Spectrum, u: [f64; 3]) -> Result<[(f64, f64); 3]> {
    let s = SpectrumSampler::new(e)?;
    Ok(u.map(|u| s.sample(u)))
}
