//! Phase-space lab: builds a 1-D field and writes one of its phase-space
//! views as CSV.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use waveray::phase_space::{
    csd_from_ensemble, husimi_smooth, intensity_marginal, uncertainty_product, wdf_from_csd, Field1D,
    GaussianPhasePoint, WdfGrid,
};
use waveray::{Error, Result};

pub const OPS: [&str; 5] = ["wdf", "csd", "marginal", "uncertainty", "smooth"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Wdf,
    Csd,
    Marginal,
    Uncertainty,
    Smooth,
}

impl std::str::FromStr for Op {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Op, String> {
        Ok(match s {
            "wdf" => Op::Wdf,
            "csd" => Op::Csd,
            "marginal" => Op::Marginal,
            "uncertainty" => Op::Uncertainty,
            "smooth" => Op::Smooth,
            _ => return Err(format!("unknown operation `{s}`; valid operations: {}", OPS.join(", "))),
        })
    }
}

/// Field source parameters. Lengths are in metres.
#[derive(Clone, Debug)]
pub struct FieldSpec {
    pub samples: usize,
    pub sigma: f64,
    /// Defaults to `sigma / 2`.
    pub spacing: Option<f64>,
    /// Centre distance of the two-point source; defaults to `16·sigma`.
    pub separation: Option<f64>,
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec {
            samples: 128,
            sigma: 1e-4,
            spacing: None,
            separation: None,
        }
    }
}

impl FieldSpec {
    fn spacing(&self) -> f64 {
        self.spacing.unwrap_or(0.5 * self.sigma)
    }

    fn validate(&self) -> Result<()> {
        if self.samples < 2 || !(self.sigma > 0.0) || !(self.spacing() > 0.0) {
            return Err(Error::invalid("need at least 2 samples, positive sigma and spacing"));
        }
        Ok(())
    }
}

/// `gaussian`, `two-point`, or a path to a `r re [im]` table.
pub fn build_field(source: &str, spec: &FieldSpec) -> Result<Field1D> {
    match source {
        "gaussian" => {
            spec.validate()?;
            Ok(Field1D::gaussian(spec.samples, spec.spacing(), spec.sigma, 0.0, 0.0))
        }
        "two-point" => {
            spec.validate()?;
            let (s, d) = (spec.sigma, spec.separation.unwrap_or(16.0 * spec.sigma));
            let g = move |x: f64| (-(x * x) / (4.0 * s * s)).exp();
            let mut f = Field1D::centered(spec.samples, spec.spacing(), |r| {
                Complex64::new(g(r - 0.5 * d) + g(r + 0.5 * d), 0.0)
            });
            f.normalize();
            Ok(f)
        }
        path => {
            let p = Path::new(path);
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Field1D::parse(&text, p)
        }
    }
}

/// Closed-form Wigner distribution of the normalized Gaussian field of
/// width `sigma` centred at the origin.
pub fn gaussian_wdf(r: f64, k: f64, sigma: f64) -> f64 {
    (-r * r / (2.0 * sigma * sigma) - 2.0 * sigma * sigma * k * k).exp() / std::f64::consts::PI
}

pub fn wdf_of(field: &Field1D) -> Result<WdfGrid> {
    Ok(wdf_from_csd(&csd_from_ensemble(std::slice::from_ref(field))?).0)
}

/// Smoothing cell of spatial width `cell_sigma`, or six samples by default.
pub fn smooth_of(field: &Field1D, cell_sigma: Option<f64>) -> Result<WdfGrid> {
    let s = cell_sigma.unwrap_or(6.0 * field.spacing);
    husimi_smooth(
        &wdf_of(field)?,
        &GaussianPhasePoint::minimum_uncertainty(0.0, 0.0, s, 1.0),
    )
}

pub fn run<W: Write>(op: Op, field: &Field1D, cell_sigma: Option<f64>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::invalid(format!("writing CSV: {e}"));
    match op {
        Op::Wdf | Op::Smooth => {
            let g = if op == Op::Wdf {
                wdf_of(field)?
            } else {
                smooth_of(field, cell_sigma)?
            };
            w.write_record(["r", "k", "w"]).map_err(io)?;
            for c in 0..g.rows() {
                for j in 0..g.cols() {
                    w.write_record([fmt(g.r(c)), fmt(g.k(j)), fmt(g.get(c, j))])
                        .map_err(io)?;
                }
            }
        }
        Op::Csd => {
            let c = csd_from_ensemble(std::slice::from_ref(field))?;
            w.write_record(["r1", "r2", "re", "im"]).map_err(io)?;
            for a in 0..c.n {
                for b in 0..c.n {
                    let v = c.get(a, b);
                    w.write_record([fmt(field.position(a)), fmt(field.position(b)), fmt(v.re), fmt(v.im)])
                        .map_err(io)?;
                }
            }
        }
        Op::Marginal => {
            w.write_record(["r", "intensity"]).map_err(io)?;
            for (r, i) in intensity_marginal(&wdf_of(field)?) {
                w.write_record([fmt(r), fmt(i)]).map_err(io)?;
            }
        }
        Op::Uncertainty => {
            let u = uncertainty_product(field)?;
            w.write_record(["sigma_r", "sigma_k", "product"]).map_err(io)?;
            w.write_record([fmt(u.sigma_r), fmt(u.sigma_k), fmt(u.product)])
                .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::invalid(format!("writing CSV: {e}")))
}

/// Round-trip exact decimal form.
fn fmt(v: f64) -> String {
    format!("{v:e}")
}
