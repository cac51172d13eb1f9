//! Scene file reader. The grammar is documented in `docs/scene-format.md`.

use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::{cuboid, quad, Camera, Scene, SceneBuilder};
use crate::bsdf::{Grating, HarveyShack, Material, MultilayerStack, Profile};
use crate::error::{Error, Result};
use crate::geometry::Shape;
use crate::image::Image;
use crate::math::Vec3;
use crate::spectral::{RefractiveIndex, Spectrum};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Open,
    Close,
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    path: &'a Path,
    base: PathBuf,
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scene(&text, path)
}

/// Parses scene text; `path` names the source in diagnostics and anchors
/// relative file references.
pub fn parse_scene(text: &str, path: &Path) -> Result<Scene> {
    let mut p = Parser {
        toks: tokenize(text, path)?,
        pos: 0,
        path,
        base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let mut b = SceneBuilder::new();
    let mut hints = Vec::new();
    let mut area_lights: Vec<(String, (String, usize), Spectrum)> = Vec::new();
    while p.pos < p.toks.len() {
        let (kw, line) = p.word()?;
        match kw.as_str() {
            "scene" => p.block(|p, key, line| match key {
                "min_feature" => {
                    let f = p.positive()?;
                    b.min_feature(f);
                    Ok(())
                }
                _ => Err(p.unknown(key, line, "scene")),
            })?,
            "camera" => {
                let cam = p.camera()?;
                b.camera(cam);
            }
            "material" => {
                let (name, nline) = p.word()?;
                if b.material_index(&name).is_some() {
                    return Err(p.err(nline, format!("material {name} is defined twice")));
                }
                let (kind, kline) = p.word()?;
                let m = p.material(&kind, kline)?;
                b.material(&name, m);
            }
            "mesh" => {
                let (name, nline) = p.word()?;
                if b.mesh_index(&name).is_some() {
                    return Err(p.err(nline, format!("mesh {name} is defined twice")));
                }
                let mut material = None;
                let mut shapes = Vec::new();
                p.block(|p, key, line| {
                    match key {
                        "material" => {
                            let (m, mline) = p.word()?;
                            let id = b
                                .material_index(&m)
                                .ok_or_else(|| p.err(mline, format!("unknown material {m}")))?;
                            material = Some(id);
                        }
                        "triangle" => {
                            let v = [p.vec3()?, p.vec3()?, p.vec3()?];
                            shapes.push(Shape::Triangle {
                                v,
                                tangent: v[1] - v[0],
                            });
                        }
                        "quad" => {
                            let (a, c, d, e) = (p.vec3()?, p.vec3()?, p.vec3()?, p.vec3()?);
                            shapes.extend(quad(a, c, d, e));
                        }
                        "box" => {
                            let (lo, hi) = (p.vec3()?, p.vec3()?);
                            if !(lo.x < hi.x && lo.y < hi.y && lo.z < hi.z) {
                                return Err(p.err(line, "box needs min < max on every axis"));
                            }
                            shapes.extend(cuboid(lo, hi));
                        }
                        "sphere" => {
                            let center = p.vec3()?;
                            let radius = p.positive()?;
                            shapes.push(Shape::Sphere { center, radius });
                        }
                        "obj" => {
                            let (file, fline) = p.string()?;
                            let full = p.base.join(&file);
                            let text = std::fs::read_to_string(&full).map_err(|e| Error::io(&full, e))?;
                            shapes.extend(parse_obj(&text, &full).map_err(|e| p.err(fline, e.to_string()))?);
                        }
                        _ => return Err(p.unknown(key, line, "mesh")),
                    }
                    Ok(())
                })?;
                let material = material.ok_or_else(|| p.err(nline, format!("mesh {name} has no material")))?;
                if shapes.is_empty() {
                    return Err(p.err(nline, format!("mesh {name} has no geometry")));
                }
                b.mesh(&name, material, shapes);
            }
            "light" => {
                let (name, nline) = p.word()?;
                if b.emitter_index(&name).is_some() || area_lights.iter().any(|(n, ..)| n == &name) {
                    return Err(p.err(nline, format!("light {name} is defined twice")));
                }
                let (kind, kline) = p.word()?;
                match kind.as_str() {
                    "distant" => {
                        let (mut dir, mut omega, mut spectrum) = (None, None, None);
                        p.block(|p, key, line| {
                            match key {
                                "direction" => dir = Some(p.vec3()?),
                                "solid_angle" => omega = Some(p.positive()?),
                                "irradiance" => spectrum = Some(p.spectrum()?),
                                _ => return Err(p.unknown(key, line, "distant light")),
                            }
                            Ok(())
                        })?;
                        let dir = dir.ok_or_else(|| p.err(kline, "distant light needs a direction"))?;
                        let omega = omega.ok_or_else(|| p.err(kline, "distant light needs a solid_angle"))?;
                        let spectrum = spectrum.ok_or_else(|| p.err(kline, "distant light needs an irradiance"))?;
                        b.distant_light(&name, dir, omega, spectrum)
                            .map_err(|e| p.err(kline, e.to_string()))?;
                    }
                    "area" => {
                        let (mut mesh, mut spectrum) = (None, None);
                        p.block(|p, key, line| {
                            match key {
                                "mesh" => mesh = Some(p.word()?),
                                "radiance" => spectrum = Some(p.spectrum()?),
                                _ => return Err(p.unknown(key, line, "area light")),
                            }
                            Ok(())
                        })?;
                        let mesh = mesh.ok_or_else(|| p.err(kline, "area light needs a mesh"))?;
                        let spectrum = spectrum.ok_or_else(|| p.err(kline, "area light needs a radiance"))?;
                        area_lights.push((name, mesh, spectrum));
                    }
                    "envmap" => {
                        let (mut file, mut scale) = (None, Spectrum::Constant(1.0));
                        p.block(|p, key, line| {
                            match key {
                                "file" => file = Some(p.string()?),
                                "scale" => scale = p.spectrum()?,
                                _ => return Err(p.unknown(key, line, "envmap light")),
                            }
                            Ok(())
                        })?;
                        // Without a file the environment is uniform.
                        let image = match file {
                            Some((file, fline)) => {
                                Image::read_pfm(&p.base.join(file)).map_err(|e| p.err(fline, e.to_string()))?
                            }
                            None => Image::uniform(16, 8, [1.0; 3]),
                        };
                        b.envmap_light(&name, image, scale)
                            .map_err(|e| p.err(kline, e.to_string()))?;
                    }
                    other => {
                        return Err(p.err(
                            kline,
                            format!("unknown light type {other} (expected distant, area or envmap)"),
                        ))
                    }
                }
            }
            "manifold" => {
                let (mut emitter, mut chain) = (None, Vec::new());
                p.block(|p, key, line| {
                    match key {
                        "emitter" => emitter = Some(p.word()?),
                        "chain" => {
                            while matches!(p.peek(), Some(Tok::Word(_))) {
                                chain.push(p.word()?);
                            }
                        }
                        _ => return Err(p.unknown(key, line, "manifold")),
                    }
                    Ok(())
                })?;
                let emitter = emitter.ok_or_else(|| p.err(line, "manifold hint needs an emitter"))?;
                hints.push((emitter, chain, line));
            }
            other => {
                return Err(p.err(
                    line,
                    format!(
                        "unknown top-level key {other} (expected scene, camera, material, mesh, light or manifold)"
                    ),
                ))
            }
        }
    }
    // Meshes may be declared after the lights that use them.
    for (name, (mesh, mline), spectrum) in area_lights {
        let id = b
            .mesh_index(&mesh)
            .ok_or_else(|| p.err(mline, format!("unknown mesh {mesh}")))?;
        b.area_light(&name, id, spectrum)
            .map_err(|e| p.err(mline, e.to_string()))?;
    }
    for ((emitter, eline), chain, line) in hints {
        let e = b
            .emitter_index(&emitter)
            .ok_or_else(|| p.err(eline, format!("unknown light {emitter}")))?;
        let mut ids = Vec::new();
        for (m, mline) in chain {
            ids.push(
                b.mesh_index(&m)
                    .ok_or_else(|| p.err(mline, format!("unknown mesh {m}")))?,
            );
        }
        b.manifold_hint(e, ids).map_err(|err| p.err(line, err.to_string()))?;
    }
    b.build().map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg,
        },
        other => other,
    })
}

fn tokenize(text: &str, path: &Path) -> Result<Vec<(Tok, usize)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut chars = raw.char_indices().peekable();
        while let Some(&(start, c)) = chars.peek() {
            match c {
                '#' => break,
                c if c.is_whitespace() => {
                    chars.next();
                }
                '{' => {
                    chars.next();
                    out.push((Tok::Open, line));
                }
                '}' => {
                    chars.next();
                    out.push((Tok::Close, line));
                }
                '"' => {
                    chars.next();
                    let mut s = String::new();
                    loop {
                        match chars.next() {
                            Some((_, '"')) => break,
                            Some((_, ch)) => s.push(ch),
                            None => {
                                return Err(Error::Parse {
                                    path: path.to_path_buf(),
                                    line,
                                    msg: "unterminated string".into(),
                                })
                            }
                        }
                    }
                    out.push((Tok::Str(s), line));
                }
                _ => {
                    let mut end = raw.len();
                    while let Some(&(j, ch)) = chars.peek() {
                        if ch.is_whitespace() || matches!(ch, '{' | '}' | '"' | '#') {
                            end = j;
                            break;
                        }
                        chars.next();
                    }
                    out.push((Tok::Word(raw[start..end].to_string()), line));
                }
            }
        }
    }
    Ok(out)
}

impl Parser<'_> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    fn unknown(&self, key: &str, line: usize, ctx: &str) -> Error {
        self.err(line, format!("unknown key {key} in {ctx}"))
    }

    fn last_line(&self) -> usize {
        self.toks.last().map_or(1, |t| t.1)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self, what: &str) -> Result<(Tok, usize)> {
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.err(self.last_line(), format!("expected {what}, found end of file")))?;
        self.pos += 1;
        Ok(t)
    }

    fn word(&mut self) -> Result<(String, usize)> {
        match self.next("a name")? {
            (Tok::Word(w), line) => Ok((w, line)),
            (t, line) => Err(self.err(line, format!("expected a name, found {t:?}"))),
        }
    }

    fn string(&mut self) -> Result<(String, usize)> {
        match self.next("a quoted string")? {
            (Tok::Str(s), line) => Ok((s, line)),
            (t, line) => Err(self.err(line, format!("expected a quoted string, found {t:?}"))),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let (w, line) = self.word()?;
        w.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(line, format!("expected a number, found {w}")))
    }

    fn positive(&mut self) -> Result<f64> {
        let line = self.toks.get(self.pos).map_or(self.last_line(), |t| t.1);
        let v = self.number()?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(line, format!("expected a positive number, found {v}")))
        }
    }

    fn vec3(&mut self) -> Result<Vec3> {
        Ok(Vec3::new(self.number()?, self.number()?, self.number()?))
    }

    fn next_is_number(&self) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.parse::<f64>().is_ok())
    }

    /// `{ key values... }`; `f` consumes the values of each key.
    fn block(&mut self, mut f: impl FnMut(&mut Self, &str, usize) -> Result<()>) -> Result<()> {
        match self.next("'{'")? {
            (Tok::Open, _) => {}
            (t, line) => return Err(self.err(line, format!("expected '{{', found {t:?}"))),
        }
        loop {
            match self.next("'}'")? {
                (Tok::Close, _) => return Ok(()),
                (Tok::Word(key), line) => f(self, &key, line)?,
                (t, line) => return Err(self.err(line, format!("expected a key, found {t:?}"))),
            }
        }
    }

    /// A number, `blackbody T scale`, or `file "path"`.
    fn spectrum(&mut self) -> Result<Spectrum> {
        if self.next_is_number() {
            let v = self.number()?;
            if v < 0.0 {
                return Err(self.err(self.toks[self.pos - 1].1, "spectrum values must be non-negative"));
            }
            return Ok(Spectrum::Constant(v));
        }
        let (w, line) = self.word()?;
        match w.as_str() {
            "blackbody" => Ok(Spectrum::Blackbody {
                temperature: self.positive()?,
                scale: self.positive()?,
            }),
            "file" => {
                let (f, fline) = self.string()?;
                Spectrum::load(&self.base.join(f)).map_err(|e| self.err(fline, e.to_string()))
            }
            _ => Err(self.err(
                line,
                format!("expected a spectrum (number, blackbody or file), found {w}"),
            )),
        }
    }

    /// `n [k]`, or `file "path"`.
    fn ior(&mut self) -> Result<RefractiveIndex> {
        if self.next_is_number() {
            let n = self.positive()?;
            let k = if self.next_is_number() { self.number()? } else { 0.0 };
            if k < 0.0 {
                return Err(self.err(self.toks[self.pos - 1].1, "extinction coefficient must be non-negative"));
            }
            return Ok(RefractiveIndex::Constant(Complex64::new(n, k)));
        }
        let (w, line) = self.word()?;
        if w != "file" {
            return Err(self.err(line, format!("expected an index (n [k]) or file, found {w}")));
        }
        let (f, fline) = self.string()?;
        RefractiveIndex::load(&self.base.join(f)).map_err(|e| self.err(fline, e.to_string()))
    }

    fn camera(&mut self) -> Result<Camera> {
        let start = self.toks.get(self.pos).map_or(self.last_line(), |t| t.1);
        let (mut pos, mut look, mut up, mut fov, mut res) = (None, None, Vec3::Y, 40.0, (256, 256));
        self.block(|p, key, line| {
            match key {
                "position" => pos = Some(p.vec3()?),
                "look_at" => look = Some(p.vec3()?),
                "up" => up = p.vec3()?,
                "fov" => fov = p.positive()?,
                "resolution" => {
                    let (w, h) = (p.positive()?, p.positive()?);
                    if w.fract() != 0.0 || h.fract() != 0.0 {
                        return Err(p.err(line, "resolution must be whole pixels"));
                    }
                    res = (w as usize, h as usize);
                }
                _ => return Err(p.unknown(key, line, "camera")),
            }
            Ok(())
        })?;
        let pos = pos.ok_or_else(|| self.err(start, "camera needs a position"))?;
        let look = look.ok_or_else(|| self.err(start, "camera needs look_at"))?;
        Camera::new(pos, look, up, fov, res.0, res.1).map_err(|e| self.err(start, e.to_string()))
    }

    fn material(&mut self, kind: &str, line: usize) -> Result<Material> {
        match kind {
            "lambertian" => {
                let mut albedo = Spectrum::Constant(0.8);
                self.block(|p, key, l| match key {
                    "albedo" => {
                        albedo = p.spectrum()?;
                        Ok(())
                    }
                    _ => Err(p.unknown(key, l, "lambertian material")),
                })?;
                Ok(Material::Lambertian { albedo })
            }
            "conductor" => {
                let mut ior = None;
                self.block(|p, key, l| match key {
                    "ior" => {
                        ior = Some(p.ior()?);
                        Ok(())
                    }
                    _ => Err(p.unknown(key, l, "conductor material")),
                })?;
                Ok(Material::Conductor { ior: ior.ok_or_else(|| self.err(line, "conductor needs an ior"))? })
            }
            "dielectric" => {
                let mut ior = None;
                self.block(|p, key, l| {
                    match key {
                        "ior" => ior = Some(p.ior()?),
                        "cauchy" => {
                            let (a, b) = (p.number()?, p.number()?);
                            ior = Some(RefractiveIndex::cauchy(a, b).map_err(|e| p.err(l, e.to_string()))?);
                        }
                        _ => return Err(p.unknown(key, l, "dielectric material")),
                    }
                    Ok(())
                })?;
                Ok(Material::Dielectric { ior: ior.ok_or_else(|| self.err(line, "dielectric needs ior or cauchy"))? })
            }
            "grating" => {
                let mut g = Grating {
                    profile: Profile::Sinusoidal,
                    period: 0.0,
                    period2: None,
                    height: 0.0,
                    orientation: 0.0,
                    ior: RefractiveIndex::Constant(Complex64::new(1.2, 7.0)),
                };
                self.block(|p, key, l| {
                    match key {
                        "profile" => {
                            let (w, wl) = p.word()?;
                            g.profile = match w.as_str() {
                                "sinusoidal" => Profile::Sinusoidal,
                                "rectangular" => Profile::Rectangular,
                                "triangular" => Profile::Triangular,
                                _ => return Err(p.err(wl, format!("unknown grating profile {w}"))),
                            }
                        }
                        "period" => g.period = p.positive()?,
                        "period2" => g.period2 = Some(p.positive()?),
                        "height" => g.height = p.positive()?,
                        "orientation" => g.orientation = p.number()?.to_radians(),
                        "ior" => g.ior = p.ior()?,
                        _ => return Err(p.unknown(key, l, "grating material")),
                    }
                    Ok(())
                })?;
                if g.period <= 0.0 || g.height <= 0.0 {
                    return Err(self.err(line, "grating needs a period and a height"));
                }
                Ok(Material::Grating(g))
            }
            "thinfilm" => {
                let mut stack = MultilayerStack::bare(RefractiveIndex::real(1.5));
                let mut has_substrate = false;
                self.block(|p, key, l| {
                    match key {
                        "layer" => {
                            let d = p.positive()?;
                            stack.layers.push((d, p.ior()?));
                        }
                        "substrate" => {
                            stack.substrate = p.ior()?;
                            has_substrate = true;
                        }
                        "ambient" => stack.ambient = p.ior()?,
                        _ => return Err(p.unknown(key, l, "thinfilm material")),
                    }
                    Ok(())
                })?;
                if !has_substrate {
                    return Err(self.err(line, "thinfilm needs a substrate"));
                }
                Ok(Material::ThinFilm(stack))
            }
            "harvey_shack" => {
                let (mut sigma, mut corr, mut exp, mut ior) = (None, None, 3.0, RefractiveIndex::real(1.5));
                self.block(|p, key, l| {
                    match key {
                        "sigma" => sigma = Some(p.positive()?),
                        "corr_length" => corr = Some(p.positive()?),
                        "exponent" => exp = p.positive()?,
                        "ior" => ior = p.ior()?,
                        _ => return Err(p.unknown(key, l, "harvey_shack material")),
                    }
                    Ok(())
                })?;
                if exp <= 1.0 {
                    return Err(self.err(line, "harvey_shack exponent must exceed 1"));
                }
                Ok(Material::HarveyShack(HarveyShack {
                    sigma: sigma.ok_or_else(|| self.err(line, "harvey_shack needs sigma"))?,
                    corr_length: corr.ok_or_else(|| self.err(line, "harvey_shack needs corr_length"))?,
                    exponent: exp,
                    ior,
                }))
            }
            other => Err(self.err(
                line,
                format!("unknown material type {other} (expected lambertian, conductor, dielectric, grating, thinfilm or harvey_shack)"),
            )),
        }
    }
}

/// Triangles of a Wavefront OBJ file (`v` and `f` records; polygons are fanned).
fn parse_obj(text: &str, path: &Path) -> Result<Vec<Shape>> {
    let mut verts = Vec::new();
    let mut out = Vec::new();
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    for (i, raw) in text.lines().enumerate() {
        let mut it = raw.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| err(i + 1, "bad vertex".into()))?;
                if c.len() != 3 {
                    return Err(err(i + 1, "vertex needs three coordinates".into()));
                }
                verts.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for t in it {
                    let first = t.split('/').next().unwrap_or("");
                    let k: i64 = first.parse().map_err(|_| err(i + 1, format!("bad face index {t}")))?;
                    let k = if k < 0 { verts.len() as i64 + k } else { k - 1 };
                    if k < 0 || k as usize >= verts.len() {
                        return Err(err(i + 1, format!("face index {t} out of range")));
                    }
                    idx.push(k as usize);
                }
                if idx.len() < 3 {
                    return Err(err(i + 1, "face needs at least three vertices".into()));
                }
                for j in 1..idx.len() - 1 {
                    let v = [verts[idx[0]], verts[idx[j]], verts[idx[j + 1]]];
                    out.push(Shape::Triangle {
                        v,
                        tangent: v[1] - v[0],
                    });
                }
            }
            _ => {}
        }
    }
    Ok(out)
}
