//! Convergence comparison: error against a reference over a pixel region as
//! a function of sample count, per transport mode.

use std::io::Write;

use waveray::render::{render, Mode, RenderConfig, RenderOutput, Window};
use waveray::scene::Scene;
use waveray::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub mode: Mode,
    pub spp: usize,
    pub mse: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareReport {
    pub roi: Window,
    pub rows: Vec<CompareRow>,
}

/// Seed offset for reference renders so they never share samples with the
/// ladder renders.
const REFERENCE_SEED_SALT: u64 = 0x5eed_0f_2ef;

/// Mean squared error over pixels and RGB channels.
pub fn mse(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    assert_eq!(a.len(), b.len(), "images differ in size");
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| (0..3).map(|c| (p[c] - q[c]).powi(2)).sum::<f64>())
        .sum();
    sum / (3 * a.len()) as f64
}

/// Renders only `roi` with the mode and sample count overridden.
pub fn render_roi(
    scene: &Scene,
    base: &RenderConfig,
    mode: Mode,
    spp: usize,
    seed: u64,
    roi: Window,
) -> Result<RenderOutput> {
    let cfg = RenderConfig {
        mode,
        spp,
        seed,
        window: Some(roi),
        ..base.clone()
    };
    render(scene, &cfg)
}

/// Runs every mode over `ladder` with the common seed `base.seed`. Each
/// mode's reference is its own render at `reference_factor` times the
/// largest ladder entry.
pub fn run_compare(
    scene: &Scene,
    base: &RenderConfig,
    modes: &[Mode],
    ladder: &[usize],
    roi: Window,
    reference_factor: usize,
) -> Result<CompareReport> {
    let top = *ladder.last().expect("empty ladder");
    let mut rows = Vec::new();
    for &mode in modes {
        let reference = render_roi(
            scene,
            base,
            mode,
            top * reference_factor,
            base.seed ^ REFERENCE_SEED_SALT,
            roi,
        )?;
        rows.extend(run_ladder(scene, base, mode, ladder, roi, &reference.rgb)?);
    }
    Ok(CompareReport { roi, rows })
}

/// Ladder renders of one mode against a given reference over `roi`.
pub fn run_ladder(
    scene: &Scene,
    base: &RenderConfig,
    mode: Mode,
    ladder: &[usize],
    roi: Window,
    reference: &[[f64; 3]],
) -> Result<Vec<CompareRow>> {
    ladder
        .iter()
        .map(|&spp| {
            let out = render_roi(scene, base, mode, spp, base.seed, roi)?;
            Ok(CompareRow {
                mode,
                spp,
                mse: mse(&out.rgb, reference),
                seconds: out.seconds,
            })
        })
        .collect()
}

impl CompareReport {
    pub fn series(&self, mode: Mode) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.mode == mode)
            .map(|r| (r.spp, r.mse))
            .collect()
    }

    /// Sample count at which `mode` reaches `target` MSE, by log-log
    /// interpolation of its series. Outside the measured range the usual
    /// `MSE ∝ 1/spp` decay is assumed from the nearest end point.
    pub fn spp_for_mse(&self, mode: Mode, target: f64) -> Option<f64> {
        let s = self.series(mode);
        spp_for_mse(&s, target)
    }

    /// How many times more samples `a` needs than `b` to match `b`'s error at
    /// `spp` samples.
    pub fn equal_mse_ratio(&self, a: Mode, b: Mode, spp: usize) -> Option<f64> {
        let target = self.series(b).into_iter().find(|&(s, _)| s == spp)?.1;
        Some(self.spp_for_mse(a, target)? / spp as f64)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::result::Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["mode", "spp", "mse", "seconds"])?;
        for r in &self.rows {
            out.write_record([
                r.mode.name().to_string(),
                r.spp.to_string(),
                format!("{:e}", r.mse),
                format!("{:.6}", r.seconds),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn spp_for_mse(series: &[(usize, f64)], target: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|&&(_, m)| m > 0.0)
        .map(|&(s, m)| ((s as f64).ln(), m.ln()))
        .collect();
    if pts.is_empty() || !(target > 0.0) {
        return None;
    }
    let t = target.ln();
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    if t >= first.1 {
        return Some((first.0 + first.1 - t).exp());
    }
    if t <= last.1 {
        return Some((last.0 + last.1 - t).exp());
    }
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if (y0 - t) * (y1 - t) <= 0.0 && y0 != y1 {
            return Some((x0 + (t - y0) * (x1 - x0) / (y1 - y0)).exp());
        }
    }
    // Non-monotone series that brackets the target nowhere: fall back to the
    // average `MSE·spp` constant.
    let c = pts.iter().map(|&(x, y)| x + y).sum::<f64>() / pts.len() as f64;
    Some((c - t).exp())
}
