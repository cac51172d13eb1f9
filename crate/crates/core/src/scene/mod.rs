//! Scene representation: camera, materials, meshes, emitters and the BVH.

mod camera;
mod emitter;
mod parse;

pub use camera::Camera;
pub use emitter::{Emitter, EmitterKind, EmitterSample, EnvMap, SourceGeometry, ENVMAP_CLUSTER};
pub use parse::{load_scene, parse_scene};

use crate::bsdf::Material;
use crate::coherence::AREA_SOURCE_AREA;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Bvh, Hit, Primitive, Ray, Shape};
use crate::image::Image;
use crate::math::{Vec3, PI};
use crate::spectral::Spectrum;

/// Features smaller than this trigger an advisory warning.
pub const MIN_FEATURE_WARNING: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct Mesh {
    pub name: String,
    pub material: usize,
    pub emitter: Option<usize>,
}

/// Declares that light from `emitter` reaches scattering surfaces through the
/// listed specular meshes, in order from the surface towards the emitter.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldHint {
    pub emitter: usize,
    pub chain: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub camera: Camera,
    pub materials: Vec<(String, Material)>,
    pub meshes: Vec<Mesh>,
    pub prims: Vec<Primitive>,
    pub emitters: Vec<Emitter>,
    pub manifold_hints: Vec<ManifoldHint>,
    pub min_feature: Option<f64>,
    pub warnings: Vec<String>,
    bvh: Bvh,
    selection: Vec<f64>,
    selection_cdf: Vec<f64>,
    bounds: Aabb,
}

impl Scene {
    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        self.bvh.intersect(&self.prims, ray, f64::INFINITY)
    }

    pub fn occluded(&self, ray: &Ray, t_max: f64) -> bool {
        self.bvh.occluded(&self.prims, ray, t_max)
    }

    pub fn material_of(&self, hit: &Hit) -> &Material {
        &self.materials[self.meshes[hit.mesh].material].1
    }

    pub fn emitter_of(&self, hit: &Hit) -> Option<usize> {
        self.meshes[hit.mesh].emitter
    }

    pub fn mesh_index(&self, name: &str) -> Option<usize> {
        self.meshes.iter().position(|m| m.name == name)
    }

    pub fn material_index(&self, name: &str) -> Option<usize> {
        self.materials.iter().position(|m| m.0 == name)
    }

    pub fn emitter_index(&self, name: &str) -> Option<usize> {
        self.emitters.iter().position(|e| e.name == name)
    }

    /// Probability of choosing emitter `e` for next-event estimation.
    pub fn selection_probability(&self, e: usize) -> f64 {
        self.selection[e]
    }

    pub fn select_emitter(&self, u: f64) -> Option<usize> {
        if self.emitters.is_empty() {
            return None;
        }
        let i = self.selection_cdf.partition_point(|&c| c <= u);
        Some(i.min(self.emitters.len() - 1))
    }

    /// Chooses an emitter by power and samples light arriving at `p`. The
    /// returned pdf includes the selection probability.
    pub fn sample_emitter(&self, p: Vec3, u: [f64; 4]) -> Option<EmitterSample> {
        let e = self.select_emitter(u[0])?;
        let mut s = self.emitters[e].sample(e, &self.prims, p, [u[1], u[2], u[3]])?;
        s.pdf *= self.selection[e];
        (s.pdf > 0.0).then_some(s)
    }

    /// Density with which `sample_emitter` produces direction `wi` from `p`
    /// on emitter `e`. `hit` is the emitter point reached, for area emitters.
    pub fn emitter_pdf(&self, e: usize, p: Vec3, wi: Vec3, hit: Option<(Vec3, Vec3)>) -> f64 {
        self.selection[e] * self.emitters[e].pdf(p, wi, hit)
    }

    /// Radiance from every infinitely distant emitter along `-wi`, as
    /// `(emitter, radiance scale)` pairs.
    pub fn background(&self, wi: Vec3) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.emitters
            .iter()
            .enumerate()
            .filter(|(_, e)| !matches!(e.kind, EmitterKind::Area { .. }))
            .map(move |(i, e)| (i, e.background_profile(wi)))
            .filter(|&(_, v)| v > 0.0)
    }
}

/// Incremental construction of a validated [`Scene`].
#[derive(Default)]
pub struct SceneBuilder {
    camera: Option<Camera>,
    materials: Vec<(String, Material)>,
    meshes: Vec<Mesh>,
    prims: Vec<Primitive>,
    emitters: Vec<Emitter>,
    hints: Vec<ManifoldHint>,
    min_feature: Option<f64>,
    warnings: Vec<String>,
}

impl SceneBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn camera(&mut self, camera: Camera) -> &mut Self {
        self.camera = Some(camera);
        self
    }

    pub fn min_feature(&mut self, size: f64) -> &mut Self {
        self.min_feature = Some(size);
        self
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn material(&mut self, name: &str, m: Material) -> usize {
        self.materials.push((name.into(), m));
        self.materials.len() - 1
    }

    pub fn mesh(&mut self, name: &str, material: usize, shapes: Vec<Shape>) -> usize {
        let id = self.meshes.len();
        self.meshes.push(Mesh {
            name: name.into(),
            material,
            emitter: None,
        });
        self.prims
            .extend(shapes.into_iter().map(|shape| Primitive { shape, mesh: id }));
        id
    }

    pub fn mesh_index(&self, name: &str) -> Option<usize> {
        self.meshes.iter().position(|m| m.name == name)
    }

    pub fn material_index(&self, name: &str) -> Option<usize> {
        self.materials.iter().position(|m| m.0 == name)
    }

    pub fn emitter_index(&self, name: &str) -> Option<usize> {
        self.emitters.iter().position(|e| e.name == name)
    }

    pub fn distant_light(
        &mut self,
        name: &str,
        direction: Vec3,
        solid_angle: f64,
        irradiance: Spectrum,
    ) -> Result<usize> {
        if !(solid_angle > 0.0 && solid_angle < 2.0 * PI) {
            return Err(Error::invalid(format!(
                "light {name}: solid angle must lie in (0, 2π) sr"
            )));
        }
        if direction.length() == 0.0 {
            return Err(Error::invalid(format!("light {name}: zero direction")));
        }
        self.emitters
            .push(Emitter::distant(name, direction, solid_angle, irradiance));
        Ok(self.emitters.len() - 1)
    }

    /// Makes every primitive of `mesh` emit `radiance` from its front side.
    pub fn area_light(&mut self, name: &str, mesh: usize, radiance: Spectrum) -> Result<usize> {
        if let Some(e) = self.meshes[mesh].emitter {
            return Err(Error::invalid(format!(
                "light {name}: mesh {} already belongs to light {}",
                self.meshes[mesh].name, self.emitters[e].name
            )));
        }
        let ids: Vec<usize> = (0..self.prims.len()).filter(|&i| self.prims[i].mesh == mesh).collect();
        let mut cdf = Vec::with_capacity(ids.len());
        let mut area = 0.0;
        for &i in &ids {
            area += self.prims[i].shape.area();
            cdf.push(area);
        }
        if !(area > 0.0) {
            return Err(Error::invalid(format!("light {name}: emitting mesh has no area")));
        }
        let mut sourcing_area = AREA_SOURCE_AREA;
        if area < AREA_SOURCE_AREA {
            self.warn(format!(
                "light {name}: emitter area {area:.3e} m² is below the {AREA_SOURCE_AREA:.0e} m² sourcing patch; clamping the patch to the emitter"
            ));
            sourcing_area = area;
        }
        let e = self.emitters.len();
        self.emitters.push(Emitter {
            name: name.into(),
            kind: EmitterKind::Area {
                prims: ids,
                cdf,
                area,
                sourcing_area,
            },
            spectrum: radiance,
        });
        self.meshes[mesh].emitter = Some(e);
        Ok(e)
    }

    pub fn envmap_light(&mut self, name: &str, image: Image, scale: Spectrum) -> Result<usize> {
        let map =
            EnvMap::new(image).ok_or_else(|| Error::invalid(format!("light {name}: environment map is black")))?;
        self.emitters.push(Emitter {
            name: name.into(),
            kind: EmitterKind::Envmap(map),
            spectrum: scale,
        });
        Ok(self.emitters.len() - 1)
    }

    pub fn manifold_hint(&mut self, emitter: usize, chain: Vec<usize>) -> Result<()> {
        if chain.is_empty() || chain.len() > 2 {
            return Err(Error::invalid("manifold chains hold one or two specular meshes"));
        }
        for &m in &chain {
            let mat = &self.materials[self.meshes[m].material].1;
            if !mat.is_purely_delta() || mat.is_grating() {
                return Err(Error::invalid(format!(
                    "manifold chain mesh {} must be a smooth specular surface",
                    self.meshes[m].name
                )));
            }
        }
        self.hints.push(ManifoldHint { emitter, chain });
        Ok(())
    }

    pub fn build(mut self) -> Result<Scene> {
        let camera = self
            .camera
            .take()
            .ok_or_else(|| Error::invalid("scene has no camera"))?;
        if self.emitters.is_empty() {
            return Err(Error::invalid("scene has no light"));
        }
        for e in &self.emitters {
            if !(e.spectrum.mean_visible() > 0.0) {
                return Err(Error::invalid(format!(
                    "light {}: spectrum is zero over the visible range",
                    e.name
                )));
            }
        }
        for m in &self.meshes {
            if m.material >= self.materials.len() {
                return Err(Error::invalid(format!("mesh {} references a missing material", m.name)));
            }
        }
        if let Some(f) = self.min_feature {
            if f < MIN_FEATURE_WARNING {
                self.warn(format!(
                    "declared minimum feature size {f:.3e} m is below 1 mm; ray-optical propagation may be inaccurate"
                ));
            }
        }
        let bvh = Bvh::build(&self.prims);
        let bounds = bvh.bounds();
        let radius = if bounds.is_empty() {
            1.0
        } else {
            0.5 * (bounds.max - bounds.min).length().max(1e-3)
        };
        let power: Vec<f64> = self.emitters.iter().map(|e| e.power(radius)).collect();
        let total: f64 = power.iter().sum();
        let selection: Vec<f64> = power.iter().map(|p| p / total).collect();
        let mut acc = 0.0;
        let selection_cdf = selection
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Scene {
            camera,
            materials: self.materials,
            meshes: self.meshes,
            prims: self.prims,
            emitters: self.emitters,
            manifold_hints: self.hints,
            min_feature: self.min_feature,
            warnings: self.warnings,
            bvh,
            selection,
            selection_cdf,
            bounds,
        })
    }
}

/// Two triangles spanning `v0 v1 v2 v3` (counter-clockwise seen from the
/// front). The tangent follows `v1 - v0`.
pub fn quad(v0: Vec3, v1: Vec3, v2: Vec3, v3: Vec3) -> Vec<Shape> {
    let tangent = v1 - v0;
    vec![
        Shape::Triangle {
            v: [v0, v1, v2],
            tangent,
        },
        Shape::Triangle {
            v: [v0, v2, v3],
            tangent,
        },
    ]
}

/// Axis-aligned box with outward-facing sides.
pub fn cuboid(min: Vec3, max: Vec3) -> Vec<Shape> {
    let c = |x: usize, y: usize, z: usize| {
        Vec3::new(
            if x == 0 { min.x } else { max.x },
            if y == 0 { min.y } else { max.y },
            if z == 0 { min.z } else { max.z },
        )
    };
    let mut out = Vec::with_capacity(12);
    out.extend(quad(c(0, 0, 0), c(0, 1, 0), c(1, 1, 0), c(1, 0, 0)));
    out.extend(quad(c(0, 0, 1), c(1, 0, 1), c(1, 1, 1), c(0, 1, 1)));
    out.extend(quad(c(0, 0, 0), c(1, 0, 0), c(1, 0, 1), c(0, 0, 1)));
    out.extend(quad(c(0, 1, 0), c(0, 1, 1), c(1, 1, 1), c(1, 1, 0)));
    out.extend(quad(c(0, 0, 0), c(0, 0, 1), c(0, 1, 1), c(0, 1, 0)));
    out.extend(quad(c(1, 0, 0), c(1, 1, 0), c(1, 1, 1), c(1, 0, 1)));
    out
}
