use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use waveray::render::{default_theta_floor, render, Mode, RenderConfig, Window};
use waveray::scene::load_scene;
use waveray_cli::compare::run_compare;
use waveray_cli::output::{preview_path, write_png};
use waveray_cli::wdf_lab::{build_field, run as run_wdf, FieldSpec, Op};
use waveray_cli::{parse_ladder, parse_resolution, parse_roi, threads_from_env};

#[derive(Parser)]
#[command(name = "waveray", version, about = "Wave-optical spectral path tracer")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Render a scene to PFM with a PNG preview next to it.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 16)]
        spp: usize,
        #[arg(long, default_value = "sample-solve")]
        mode: Mode,
        #[arg(long, default_value = "out.pfm")]
        out: PathBuf,
        /// Preview exposure in stops.
        #[arg(long, default_value_t = 0.0)]
        exposure: f64,
        /// Render only this pixel window.
        #[arg(long, value_parser = parse_roi)]
        roi: Option<Window>,
    },
    /// Error against a reference over a region as a function of spp, per mode.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_roi)]
        roi: Window,
        #[arg(long, value_parser = parse_ladder, default_value = "1,4,16,64")]
        ladder: ::std::vec::Vec<usize>,
        /// Modes to compare, comma separated; all by default.
        #[arg(long = "modes", value_delimiter = ',')]
        modes: Vec<Mode>,
        /// Reference spp as a multiple of the largest ladder entry.
        #[arg(long, default_value_t = 64)]
        reference_factor: usize,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Phase-space views of a 1-D field as CSV.
    WdfLab {
        /// `gaussian`, `two-point`, or a file of `r re [im]` rows.
        source: String,
        /// One of wdf, csd, marginal, uncertainty, smooth.
        #[arg(long)]
        op: String,
        #[arg(long, default_value_t = 1e-4)]
        sigma: f64,
        #[arg(long, default_value_t = 128)]
        samples: usize,
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long)]
        separation: Option<f64>,
        /// Spatial width of the smoothing cell.
        #[arg(long)]
        cell_sigma: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    scene: PathBuf,
    #[arg(long, value_parser = parse_resolution)]
    resolution: Option<(usize, usize)>,
    /// Coherence area in m² used by pc-baseline.
    #[arg(long)]
    theta_floor: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    max_depth: usize,
}

impl Common {
    fn config(&self) -> Result<RenderConfig, String> {
        let cfg = RenderConfig {
            max_depth: self.max_depth,
            seed: self.seed,
            resolution: self.resolution,
            theta_floor: self.theta_floor.unwrap_or_else(default_theta_floor),
            threads: threads_from_env()?,
            ..RenderConfig::default()
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("waveray: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Cmd) -> Result<(), String> {
    match cmd {
        Cmd::Render {
            common,
            spp,
            mode,
            out,
            exposure,
            roi,
        } => {
            let scene = load(&common.scene)?;
            let cfg = RenderConfig {
                mode,
                spp,
                window: roi,
                ..common.config()?
            };
            let result = render(&scene, &cfg).map_err(|e| e.to_string())?;
            let img = result.to_image();
            img.write_pfm(&out).map_err(|e| e.to_string())?;
            write_png(&img, exposure, &preview_path(&out))?;
            println!(
                "seed {} spp {} time {:.3} s -> {}",
                cfg.seed,
                cfg.spp,
                result.seconds,
                out.display()
            );
        }
        Cmd::Compare {
            common,
            roi,
            ladder,
            modes,
            reference_factor,
            out,
        } => {
            let scene = load(&common.scene)?;
            let cfg = common.config()?;
            let modes = if modes.is_empty() { Mode::ALL.to_vec() } else { modes };
            if reference_factor == 0 {
                return Err("reference factor must be at least 1".into());
            }
            let report =
                run_compare(&scene, &cfg, &modes, &ladder, roi, reference_factor).map_err(|e| e.to_string())?;
            eprintln!(
                "seed {} ladder {:?} roi {},{},{},{}",
                cfg.seed, ladder, roi.x, roi.y, roi.w, roi.h
            );
            match out {
                Some(p) => {
                    let f = std::fs::File::create(&p).map_err(|e| format!("{}: {e}", p.display()))?;
                    report.write_csv(f).map_err(|e| format!("{}: {e}", p.display()))?;
                }
                None => report.write_csv(std::io::stdout().lock()).map_err(|e| e.to_string())?,
            }
        }
        Cmd::WdfLab {
            source,
            op,
            sigma,
            samples,
            spacing,
            separation,
            cell_sigma,
            out,
        } => {
            let op: Op = op.parse()?;
            let spec = FieldSpec {
                samples,
                sigma,
                spacing,
                separation,
            };
            let field = build_field(&source, &spec).map_err(|e| e.to_string())?;
            match out {
                Some(p) => {
                    let f = std::fs::File::create(&p).map_err(|e| format!("{}: {e}", p.display()))?;
                    run_wdf(op, &field, cell_sigma, std::io::BufWriter::new(f)).map_err(|e| e.to_string())?;
                }
                None => {
                    let mut stdout = std::io::stdout().lock();
                    run_wdf(op, &field, cell_sigma, &mut stdout).map_err(|e| e.to_string())?;
                    stdout.flush().map_err(|e| e.to_string())?;
                }
            }
        }
    }
    Ok(())
}

fn load(path: &Path) -> Result<waveray::scene::Scene, String> {
    let scene = load_scene(path).map_err(|e| e.to_string())?;
    for w in &scene.warnings {
        eprintln!("warning: {w}");
    }
    Ok(scene)
}
