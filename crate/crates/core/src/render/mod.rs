//! Spectral, polarized path tracing with generalized rays.
//!
//! Each camera sample is first traced backwards with scalar hero-wavelength
//! throughput (`trace_sample`), producing light-connected paths. Every path
//! is then re-evaluated forwards from its emitter with full Mueller calculus
//! (`solve_path`), where the transport mode decides how diffraction gratings
//! are treated.

mod manifold;
mod path;

pub use manifold::{solve_chain, ChainSolution};
pub use path::{solve_path, trace_sample, Connection, ConnectionKind, Endpoint, PathVertex};

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::math::{mix64, Sym2};
use crate::scene::Scene;
use crate::spectral::cie::xyz_to_linear_srgb;
use crate::spectral::SpectrumSampler;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Coherent sampling, partially coherent evaluation at gratings.
    SampleSolve,
    /// Gratings act as sums of delta orders; no coherence is applied.
    FullyCoherent,
    /// Gratings are widened by one fixed, global coherence shape.
    PcBaseline,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::SampleSolve, Mode::FullyCoherent, Mode::PcBaseline];

    pub fn name(self) -> &'static str {
        match self {
            Mode::SampleSolve => "sample-solve",
            Mode::FullyCoherent => "fully-coherent",
            Mode::PcBaseline => "pc-baseline",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::invalid(format!(
                "unknown mode {s} (expected sample-solve, fully-coherent or pc-baseline)"
            ))
        })
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Pixel rectangle `[x, x+w) × [y, y+h)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Window {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Window {
    pub fn full(width: usize, height: usize) -> Window {
        Window {
            x: 0,
            y: 0,
            w: width,
            h: height,
        }
    }

    pub fn len(&self) -> usize {
        self.w * self.h
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Coherence area (m²) of the default pc-baseline floor: a 0.5 sr source seen at 550 nm.
pub fn default_theta_floor() -> f64 {
    let l = 550e-9;
    l * l / 0.25
}

#[derive(Clone, Debug)]
pub struct RenderConfig {
    pub mode: Mode,
    pub spp: usize,
    pub max_depth: usize,
    pub rr_start: usize,
    pub seed: u64,
    /// Output resolution; defaults to the scene camera's.
    pub resolution: Option<(usize, usize)>,
    /// Only these pixels are rendered.
    pub window: Option<Window>,
    /// Isotropic coherence area `Θ = a·I` (m²) used by pc-baseline.
    pub theta_floor: f64,
    /// Connect through specular chains named by the scene's manifold hints.
    pub manifold: bool,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            mode: Mode::SampleSolve,
            spp: 16,
            max_depth: 16,
            rr_start: 3,
            seed: 0,
            resolution: None,
            window: None,
            theta_floor: default_theta_floor(),
            manifold: true,
            threads: None,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.spp == 0 {
            return Err(Error::invalid("spp must be at least 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::invalid("max depth must be at least 1"));
        }
        if !(self.theta_floor > 0.0 && self.theta_floor.is_finite()) {
            return Err(Error::invalid("theta floor must be a positive area"));
        }
        Ok(())
    }

    pub fn theta_floor_matrix(&self) -> Sym2 {
        Sym2::scalar(self.theta_floor)
    }
}

/// Accumulated estimates for the rendered window.
#[derive(Clone, Debug)]
pub struct RenderOutput {
    pub window: Window,
    pub spp: usize,
    /// Mean linear sRGB per pixel, row-major over the window.
    pub rgb: Vec<[f64; 3]>,
    /// Mean spectral radiance averaged over the visible band, per pixel.
    pub radiance: Vec<f64>,
    /// Second moment of the per-sample band radiance.
    pub radiance_sq: Vec<f64>,
    pub seconds: f64,
}

impl RenderOutput {
    /// Sample variance of the per-sample band radiance at pixel `i`.
    pub fn radiance_variance(&self, i: usize) -> f64 {
        let n = self.spp as f64;
        if n < 2.0 {
            return 0.0;
        }
        ((self.radiance_sq[i] - self.radiance[i] * self.radiance[i]) * n / (n - 1.0)).max(0.0)
    }

    pub fn to_image(&self) -> Image {
        let mut img = Image::new(self.window.w, self.window.h);
        for (p, c) in img.pixels.iter_mut().zip(&self.rgb) {
            *p = c.map(|v| v as f32);
        }
        img
    }
}

/// Read-only state shared by all workers.
pub(crate) struct Context<'a> {
    pub scene: &'a Scene,
    pub cfg: &'a RenderConfig,
    pub samplers: Vec<SpectrumSampler>,
}

impl<'a> Context<'a> {
    pub fn new(scene: &'a Scene, cfg: &'a RenderConfig) -> Result<Self> {
        cfg.validate()?;
        let samplers = scene
            .emitters
            .iter()
            .map(|e| SpectrumSampler::new(&e.spectrum))
            .collect::<Result<_>>()?;
        Ok(Context { scene, cfg, samplers })
    }
}

/// Per-pixel random stream; independent of tiling and thread count.
pub fn pixel_rng(seed: u64, pixel: u64) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(mix64(seed ^ mix64(pixel.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}

pub fn render(scene: &Scene, cfg: &RenderConfig) -> Result<RenderOutput> {
    let ctx = Context::new(scene, cfg)?;
    let (width, height) = cfg.resolution.unwrap_or((scene.camera.width, scene.camera.height));
    if width == 0 || height == 0 {
        return Err(Error::invalid("resolution must be positive"));
    }
    let camera = scene.camera.with_resolution(width, height);
    let window = cfg.window.unwrap_or(Window::full(width, height));
    if window.x + window.w > width || window.y + window.h > height || window.is_empty() {
        return Err(Error::invalid(format!(
            "window {}x{} at ({}, {}) does not fit a {width}x{height} image",
            window.w, window.h, window.x, window.y
        )));
    }
    let start = Instant::now();
    let work = |i: usize| {
        let (x, y) = (window.x + i % window.w, window.y + i / window.w);
        let mut rng = pixel_rng(cfg.seed, (y * width + x) as u64);
        let mut xyz = [0.0; 3];
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..cfg.spp {
            let ray = camera.ray(x as f64 + rng.gen::<f64>(), y as f64 + rng.gen::<f64>());
            let est = path::estimate(&ctx, ray, &mut rng);
            for c in 0..3 {
                xyz[c] += est.xyz[c];
            }
            s1 += est.radiance;
            s2 += est.radiance * est.radiance;
        }
        let n = cfg.spp as f64;
        (xyz_to_linear_srgb(xyz.map(|v| v / n)), s1 / n, s2 / n)
    };
    let results: Vec<([f64; 3], f64, f64)> = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?
            .install(|| (0..window.len()).into_par_iter().map(work).collect()),
        None => (0..window.len()).into_par_iter().map(work).collect(),
    };
    let mut out = RenderOutput {
        window,
        spp: cfg.spp,
        rgb: Vec::with_capacity(window.len()),
        radiance: Vec::with_capacity(window.len()),
        radiance_sq: Vec::with_capacity(window.len()),
        seconds: 0.0,
    };
    for (rgb, m1, m2) in results {
        out.rgb.push(rgb);
        out.radiance.push(m1);
        out.radiance_sq.push(m2);
    }
    out.seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Balance heuristic weight of strategy `a` against `b`. A delta strategy is
/// passed as `b = 0` and keeps full weight.
pub fn mis_weight(pdf_a: f64, pdf_b: f64) -> Result<f64> {
    if !(pdf_a >= 0.0 && pdf_b >= 0.0) {
        return Err(Error::invalid("MIS densities must be non-negative"));
    }
    if pdf_a + pdf_b == 0.0 {
        return Err(Error::invalid("MIS weight needs at least one non-zero density"));
    }
    Ok(pdf_a / (pdf_a + pdf_b))
}
