use crate::coherence::{angular_density, disk_mass, isotropic_diffusivity, sample_angular};
use crate::geometry::Primitive;
use crate::image::Image;
use crate::math::{Sym2, Vec3, PI};
use crate::spectral::Spectrum;

/// Side of the square pixel cluster that sources coherence for environment maps.
pub const ENVMAP_CLUSTER: usize = 2;

#[derive(Clone, Debug)]
pub enum EmitterKind {
    /// Light from a distant source around `direction` (pointing towards the
    /// source). The angular radiance profile is a Gaussian of covariance
    /// `(solid_angle/2)·I` in transverse direction cosines, scaled so the
    /// irradiance on a surface facing the source is `irradiance(λ)`.
    Distant {
        direction: Vec3,
        solid_angle: f64,
        omega: Sym2,
        mass: f64,
    },
    /// Emissive mesh radiating `spectrum` from the front side of its primitives.
    Area {
        prims: Vec<usize>,
        cdf: Vec<f64>,
        area: f64,
        sourcing_area: f64,
    },
    Envmap(EnvMap),
}

#[derive(Clone, Debug)]
pub struct Emitter {
    pub name: String,
    pub kind: EmitterKind,
    /// Irradiance spectrum for distant emitters, radiance otherwise.
    pub spectrum: Spectrum,
}

/// Where the light of a sample was sourced, for building its coherence state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SourceGeometry {
    Distant { solid_angle: f64 },
    Area { a: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct EmitterSample {
    pub emitter: usize,
    /// Unit direction from the reference point towards the light.
    pub wi: Vec3,
    /// Distance to the sampled point; infinite for distant and environment light.
    pub distance: f64,
    /// Solid-angle density at the reference point, including emitter selection.
    pub pdf: f64,
    /// Radiance is `profile · spectrum(λ)`.
    pub profile: f64,
    pub source: SourceGeometry,
}

/// Equirectangular environment map; `y` is up, the top row looks along `+y`.
#[derive(Clone, Debug)]
pub struct EnvMap {
    pub image: Image,
    values: Vec<f64>,
    cdf: Vec<f64>,
    total: f64,
}

impl EnvMap {
    pub fn new(image: Image) -> Option<EnvMap> {
        let (w, h) = (image.width, image.height);
        let values: Vec<f64> = image
            .pixels
            .iter()
            .map(|p| (p[0] as f64 + p[1] as f64 + p[2] as f64) / 3.0)
            .collect();
        let mut cdf = Vec::with_capacity(w * h);
        let mut acc = 0.0;
        for y in 0..h {
            let sin = ((y as f64 + 0.5) / h as f64 * PI).sin();
            for x in 0..w {
                acc += values[y * w + x].max(0.0) * sin;
                cdf.push(acc);
            }
        }
        (acc > 0.0).then_some(EnvMap {
            image,
            values,
            cdf,
            total: acc,
        })
    }

    fn pixel_of(&self, d: Vec3) -> (usize, usize) {
        let theta = d.y.clamp(-1.0, 1.0).acos();
        let phi = d.z.atan2(d.x).rem_euclid(2.0 * PI);
        let x = ((phi / (2.0 * PI) * self.image.width as f64) as usize).min(self.image.width - 1);
        let y = ((theta / PI * self.image.height as f64) as usize).min(self.image.height - 1);
        (x, y)
    }

    fn pixel_solid_angle_density(&self) -> f64 {
        (self.image.width * self.image.height) as f64 / (2.0 * PI * PI)
    }

    pub fn value(&self, d: Vec3) -> f64 {
        let (x, y) = self.pixel_of(d);
        self.values[y * self.image.width + x].max(0.0)
    }

    pub fn pdf(&self, d: Vec3) -> f64 {
        let (x, y) = self.pixel_of(d);
        let sin_pix = ((y as f64 + 0.5) / self.image.height as f64 * PI).sin();
        let sin = (1.0 - d.y * d.y).max(0.0).sqrt();
        if sin <= 0.0 {
            return 0.0;
        }
        let p = self.values[y * self.image.width + x].max(0.0) * sin_pix / self.total;
        p * self.pixel_solid_angle_density() / sin
    }

    pub fn sample(&self, u: [f64; 3]) -> Option<(Vec3, f64)> {
        let target = u[0] * self.total;
        let i = self.cdf.partition_point(|&c| c <= target).min(self.cdf.len() - 1);
        let (w, h) = (self.image.width, self.image.height);
        let (x, y) = (i % w, i / w);
        let phi = (x as f64 + u[1]) / w as f64 * 2.0 * PI;
        let theta = (y as f64 + u[2]) / h as f64 * PI;
        let d = Vec3::new(theta.sin() * phi.cos(), theta.cos(), theta.sin() * phi.sin());
        let pdf = self.pdf(d);
        (pdf > 0.0).then_some((d, pdf))
    }

    /// Solid angle of the sourcing cluster around direction `d`.
    pub fn cluster_solid_angle(&self, d: Vec3) -> f64 {
        let sin = (1.0 - d.y * d.y).max(1e-6).sqrt();
        (ENVMAP_CLUSTER * ENVMAP_CLUSTER) as f64 * sin / self.pixel_solid_angle_density()
    }

    /// Mean radiance scale weighted by solid angle, times 4π.
    fn integral(&self) -> f64 {
        self.total / self.pixel_solid_angle_density()
    }
}

impl Emitter {
    pub fn distant(name: &str, direction: Vec3, solid_angle: f64, irradiance: Spectrum) -> Emitter {
        let omega = isotropic_diffusivity(solid_angle);
        Emitter {
            name: name.into(),
            kind: EmitterKind::Distant {
                direction: direction.normalized(),
                solid_angle,
                omega,
                mass: disk_mass(&omega),
            },
            spectrum: irradiance,
        }
    }

    pub fn is_distant(&self) -> bool {
        matches!(self.kind, EmitterKind::Distant { .. })
    }

    /// Radiance scale of light arriving along `-wi` from this emitter's
    /// infinite part (distant or environment). Area emitters return 0.
    pub fn background_profile(&self, wi: Vec3) -> f64 {
        match &self.kind {
            EmitterKind::Distant {
                direction, omega, mass, ..
            } => {
                let c = direction.dot(wi);
                if c <= 0.0 {
                    0.0
                } else {
                    angular_density(*direction, wi, omega, *mass) / c
                }
            }
            EmitterKind::Envmap(m) => m.value(wi),
            EmitterKind::Area { .. } => 0.0,
        }
    }

    /// Rough emitted power used for light selection.
    pub(super) fn power(&self, scene_radius: f64) -> f64 {
        let s = self.spectrum.mean_visible();
        match &self.kind {
            EmitterKind::Distant { .. } => s * PI * scene_radius * scene_radius,
            EmitterKind::Area { area, .. } => s * PI * area,
            EmitterKind::Envmap(m) => s * m.integral() * PI * scene_radius * scene_radius,
        }
    }

    /// Uniform point on an area emitter with its normal and area density.
    pub(crate) fn sample_point(&self, prims: &[Primitive], u: [f64; 3]) -> Option<(Vec3, Vec3, f64)> {
        let EmitterKind::Area {
            prims: ids, cdf, area, ..
        } = &self.kind
        else {
            return None;
        };
        let target = u[0] * area;
        let k = cdf.partition_point(|&c| c <= target).min(ids.len() - 1);
        let lo = if k == 0 { 0.0 } else { cdf[k - 1] };
        let uu = ((target - lo) / (cdf[k] - lo)).clamp(0.0, 1.0);
        let (q, n) = prims[ids[k]].shape.sample_point(uu, u[1]);
        Some((q, n, 1.0 / area))
    }

    /// Samples light arriving at `p`, without selection probability.
    pub(super) fn sample(&self, index: usize, prims: &[Primitive], p: Vec3, u: [f64; 3]) -> Option<EmitterSample> {
        match &self.kind {
            EmitterKind::Distant {
                direction,
                solid_angle,
                omega,
                mass,
            } => {
                let wi = sample_angular(*direction, omega, u[1], u[2])?;
                let pdf = angular_density(*direction, wi, omega, *mass);
                (pdf > 0.0).then(|| EmitterSample {
                    emitter: index,
                    wi,
                    distance: f64::INFINITY,
                    pdf,
                    profile: pdf / direction.dot(wi),
                    source: SourceGeometry::Distant {
                        solid_angle: *solid_angle,
                    },
                })
            }
            EmitterKind::Area { sourcing_area, .. } => {
                let (q, n, pdf_area) = self.sample_point(prims, u)?;
                let d = q - p;
                let dist = d.length();
                if dist <= 0.0 {
                    return None;
                }
                let wi = d / dist;
                let cos_l = -n.dot(wi);
                if cos_l <= 0.0 {
                    return None;
                }
                Some(EmitterSample {
                    emitter: index,
                    wi,
                    distance: dist,
                    pdf: pdf_area * dist * dist / cos_l,
                    profile: 1.0,
                    source: SourceGeometry::Area { a: *sourcing_area },
                })
            }
            EmitterKind::Envmap(m) => {
                let (wi, pdf) = m.sample(u)?;
                Some(EmitterSample {
                    emitter: index,
                    wi,
                    distance: f64::INFINITY,
                    pdf,
                    profile: m.value(wi),
                    source: SourceGeometry::Distant {
                        solid_angle: m.cluster_solid_angle(wi),
                    },
                })
            }
        }
    }

    /// Density of `sample` for direction `wi` from `p`, without selection
    /// probability. For area emitters `hit` is the point reached and its normal.
    pub(super) fn pdf(&self, p: Vec3, wi: Vec3, hit: Option<(Vec3, Vec3)>) -> f64 {
        match &self.kind {
            EmitterKind::Distant {
                direction, omega, mass, ..
            } => angular_density(*direction, wi, omega, *mass),
            EmitterKind::Envmap(m) => m.pdf(wi),
            EmitterKind::Area { area, .. } => {
                let Some((q, n)) = hit else { return 0.0 };
                let cos_l = -n.dot(wi);
                if cos_l <= 0.0 {
                    return 0.0;
                }
                (q - p).length_squared() / (area * cos_l)
            }
        }
    }
}
