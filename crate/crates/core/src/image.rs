//! Float RGB images and the PFM format.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major from the top-left pixel.
    pub pixels: Vec<[f32; 3]>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image {
            width,
            height,
            pixels: vec![[0.0; 3]; width * height],
        }
    }

    pub fn uniform(width: usize, height: usize, value: [f32; 3]) -> Self {
        Image {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [f32; 3] {
        self.pixels[y * self.width + x]
    }

    /// Colour PFM bytes: `PF` header, negative scale for little-endian,
    /// rows stored bottom to top.
    pub fn to_pfm_bytes(&self) -> Vec<u8> {
        let mut out = format!("PF\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        for y in (0..self.height).rev() {
            for px in &self.pixels[y * self.width..(y + 1) * self.width] {
                for c in px {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn write_pfm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_pfm_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_pfm(path: &Path) -> Result<Image> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_pfm_bytes(&bytes).map_err(|msg| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg,
        })
    }

    pub fn from_pfm_bytes(bytes: &[u8]) -> std::result::Result<Image, String> {
        // Header: three whitespace-separated tokens after the magic, then one
        // whitespace byte before the raster.
        let mut pos = 0;
        let mut tokens = Vec::new();
        while tokens.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err("truncated PFM header".into());
            }
            tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        pos += 1;
        let channels = match tokens[0].as_str() {
            "PF" => 3,
            "Pf" => 1,
            other => return Err(format!("not a PFM file (magic {other:?})")),
        };
        let parse = |s: &str| s.parse::<usize>().map_err(|_| format!("bad PFM dimension {s:?}"));
        let (width, height) = (parse(&tokens[1])?, parse(&tokens[2])?);
        let scale: f32 = tokens[3]
            .parse()
            .map_err(|_| format!("bad PFM scale {:?}", tokens[3]))?;
        let need = width * height * channels * 4;
        let raster = bytes.get(pos..pos + need).ok_or("truncated PFM raster")?;
        let value = |i: usize| {
            let b = [raster[4 * i], raster[4 * i + 1], raster[4 * i + 2], raster[4 * i + 3]];
            if scale < 0.0 {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        };
        let mut img = Image::new(width, height);
        for row in 0..height {
            let y = height - 1 - row;
            for x in 0..width {
                let base = (row * width + x) * channels;
                img.pixels[y * width + x] = if channels == 3 {
                    [value(base), value(base + 1), value(base + 2)]
                } else {
                    let v = value(base);
                    [v, v, v]
                };
            }
        }
        Ok(img)
    }
}
