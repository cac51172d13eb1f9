//! PFM and PNG preview writing.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use waveray::image::Image;

/// `exposure` is in stops.
pub fn tonemap_srgb8(img: &Image, exposure: f64) -> Vec<u8> {
    let gain = 2f64.powf(exposure);
    img.pixels
        .iter()
        .flat_map(|p| p.map(|c| encode_srgb(c as f64 * gain)))
        .collect()
}

fn encode_srgb(linear: f64) -> u8 {
    let v = if linear.is_nan() { 0.0 } else { linear.clamp(0.0, 1.0) };
    let e = if v <= 0.0031308 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    };
    (e * 255.0 + 0.5) as u8
}

pub fn write_png(img: &Image, exposure: f64, path: &Path) -> Result<(), String> {
    let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), img.width as u32, img.height as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc.write_header().map_err(|e| format!("{}: {e}", path.display()))?;
    w.write_image_data(&tonemap_srgb8(img, exposure))
        .map_err(|e| format!("{}: {e}", path.display()))
}

/// `out.pfm` gets its preview at `out.png`.
pub fn preview_path(pfm: &Path) -> PathBuf {
    pfm.with_extension("png")
}
