//! Scattering models. All directions are in the local shading frame with
//! the surface normal along `+z`; `wi` points towards the light and `wo`
//! towards the viewer.
//!
//! Mueller matrices map Stokes vectors whose reference axis is
//! `s_axis(z, -wi)` (light travelling along `-wi`) to Stokes vectors with
//! reference axis `s_axis(z, wo)`.

mod grating;
mod harvey_shack;
mod multilayer;

pub use grating::{Grating, GratingOrder, Profile};
pub use harvey_shack::HarveyShack;
pub use multilayer::{tmm_reflectance, MultilayerStack};

use crate::error::{Error, Result};
use crate::math::{Sym2, Vec3, PI};
use crate::polarimetry::{frame_rotation, fresnel_mueller, s_axis, MuellerMatrix};
use crate::spectral::{RefractiveIndex, Spectrum};

/// A propagation direction together with its vacuum wavelength in nm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wavevector {
    pub dir: Vec3,
    pub lambda_nm: f64,
}

impl Wavevector {
    pub fn new(dir: Vec3, lambda_nm: f64) -> Self {
        Wavevector { dir, lambda_nm }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lobe {
    DeltaReflect,
    DeltaRefract,
    GratingOrder(i32, i32),
    Diffuse,
    Glossy,
}

impl Lobe {
    pub fn is_delta(self) -> bool {
        matches!(self, Lobe::DeltaReflect | Lobe::DeltaRefract | Lobe::GratingOrder(..))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DirectionSample {
    pub wi: Vec3,
    /// Solid-angle density for non-delta lobes, 0 for delta lobes.
    pub pdf: f64,
    /// Discrete probability of having picked this lobe. For delta lobes the
    /// weight is `value / choice_prob`.
    pub choice_prob: f64,
    /// `f·cosθ/pdf` for non-delta lobes, delta throughput otherwise.
    pub weight: MuellerMatrix,
    pub lobe: Lobe,
}

#[derive(Clone, Debug)]
pub enum Material {
    Lambertian {
        albedo: Spectrum,
    },
    /// Smooth opaque reflector (mirror or metal).
    Conductor {
        ior: RefractiveIndex,
    },
    /// Smooth two-sided dielectric interface; the `-z` side is inside.
    Dielectric {
        ior: RefractiveIndex,
    },
    Grating(Grating),
    ThinFilm(MultilayerStack),
    HarveyShack(HarveyShack),
}

const ROULETTE_EPS: f64 = 1e-12;

impl Material {
    pub fn is_transmissive(&self) -> bool {
        matches!(self, Material::Dielectric { .. })
    }

    /// True if every lobe is a delta lobe in coherent transport.
    pub fn is_purely_delta(&self) -> bool {
        matches!(
            self,
            Material::Conductor { .. } | Material::Dielectric { .. } | Material::Grating(_) | Material::ThinFilm(_)
        )
    }

    pub fn is_grating(&self) -> bool {
        matches!(self, Material::Grating(_))
    }

    /// Non-delta part of the BSDF, in 1/sr.
    pub fn eval_coherent(&self, wi: &Wavevector, wo: &Wavevector) -> Result<MuellerMatrix> {
        if wi.lambda_nm != wo.lambda_nm {
            return Err(Error::WavelengthMismatch(wi.lambda_nm, wo.lambda_nm));
        }
        Ok(self.eval(wi.dir, wo.dir, wi.lambda_nm))
    }

    pub fn eval(&self, wi: Vec3, wo: Vec3, lambda: f64) -> MuellerMatrix {
        if wi.z <= 0.0 || wo.z <= 0.0 {
            return MuellerMatrix::ZERO;
        }
        match self {
            Material::Lambertian { albedo } => MuellerMatrix::depolarizer(albedo.eval(lambda).min(1.0) / PI),
            Material::HarveyShack(h) => h.eval(wi, wo, lambda),
            _ => MuellerMatrix::ZERO,
        }
    }

    /// Density of `sample` over non-delta lobes.
    pub fn pdf(&self, wi: Vec3, wo: Vec3, lambda: f64) -> f64 {
        if wi.z <= 0.0 || wo.z <= 0.0 {
            return 0.0;
        }
        match self {
            Material::Lambertian { .. } => wi.z / PI,
            Material::HarveyShack(h) => h.pdf(wi, wo, lambda),
            _ => 0.0,
        }
    }

    /// Importance samples an incident direction for exit direction `wo`.
    pub fn sample(&self, wo: Vec3, lambda: f64, u: [f64; 3]) -> Option<DirectionSample> {
        match self {
            Material::Lambertian { albedo } => {
                if wo.z <= 0.0 {
                    return None;
                }
                let wi = cosine_hemisphere(u[1], u[2]);
                let a = albedo.eval(lambda).min(1.0);
                (a > 0.0 && wi.z > 0.0).then(|| DirectionSample {
                    wi,
                    pdf: wi.z / PI,
                    choice_prob: 1.0,
                    weight: MuellerMatrix::depolarizer(a),
                    lobe: Lobe::Diffuse,
                })
            }
            Material::Conductor { .. } | Material::ThinFilm(_) => {
                if wo.z <= 0.0 {
                    return None;
                }
                let wi = specular(wo);
                let weight = self.delta_value(Lobe::DeltaReflect, wi, wo, lambda);
                (weight.m00() > ROULETTE_EPS).then_some(DirectionSample {
                    wi,
                    pdf: 0.0,
                    choice_prob: 1.0,
                    weight,
                    lobe: Lobe::DeltaReflect,
                })
            }
            Material::Dielectric { ior } => sample_dielectric(ior, wo, lambda, u[0]),
            Material::Grating(g) => g.sample(wo, lambda, u[0]),
            Material::HarveyShack(h) => h.sample(wo, lambda, u),
        }
    }

    /// Integrated throughput of delta lobe `lobe` between `wi` and `wo`.
    pub fn delta_value(&self, lobe: Lobe, wi: Vec3, wo: Vec3, lambda: f64) -> MuellerMatrix {
        match (self, lobe) {
            (Material::Conductor { ior }, Lobe::DeltaReflect) => {
                fresnel_mueller(wo.z.abs().min(1.0), 1.0, ior.eval(lambda)).reflect
            }
            (Material::ThinFilm(stack), Lobe::DeltaReflect) => {
                let (rs, rp) = tmm_reflectance(stack, wo.z.abs().min(1.0), lambda);
                MuellerMatrix::from_amplitudes(rs, rp)
            }
            (Material::Dielectric { ior }, Lobe::DeltaReflect | Lobe::DeltaRefract) => {
                let (eta_i, eta_t, cos_o) = dielectric_sides(ior, wo, lambda);
                let f = fresnel_mueller(cos_o, eta_i, num_complex::Complex64::new(eta_t, 0.0));
                if lobe == Lobe::DeltaReflect {
                    f.reflect
                } else {
                    f.transmit
                }
            }
            (Material::Grating(g), Lobe::GratingOrder(m1, m2)) => g.order_value((m1, m2), wi, wo, lambda),
            (Material::HarveyShack(h), Lobe::DeltaReflect) => h.specular_value(wo, lambda),
            _ => MuellerMatrix::ZERO,
        }
    }

    /// Delta-lobe direction for `lobe` at wavelength `lambda`, if it exists.
    pub fn delta_direction(&self, lobe: Lobe, wo: Vec3, lambda: f64) -> Option<Vec3> {
        match (self, lobe) {
            (Material::Dielectric { ior }, Lobe::DeltaRefract) => {
                let (eta_i, eta_t, _) = dielectric_sides(ior, wo, lambda);
                refract(wo, eta_i / eta_t)
            }
            (_, Lobe::DeltaReflect) => Some(specular(wo)),
            (Material::Grating(g), Lobe::GratingOrder(m1, m2)) => g.incident_for(wo, (m1, m2), lambda),
            _ => None,
        }
    }

    /// True if the delta lobe's direction changes with wavelength.
    pub fn delta_is_dispersive(&self, lobe: Lobe) -> bool {
        match (self, lobe) {
            (Material::Dielectric { ior }, Lobe::DeltaRefract) => ior.is_dispersive(),
            (Material::Grating(_), Lobe::GratingOrder(m1, m2)) => m1 != 0 || m2 != 0,
            _ => false,
        }
    }

    /// BSDF seen by a partially coherent bundle centred on `wi` with angular
    /// covariance `λ²Θ⁻¹`. Delta lobes of smooth interfaces stay delta and are
    /// not returned.
    pub fn eval_partially_coherent(&self, wi: Vec3, wo: Vec3, theta: &Sym2, lambda: f64) -> Result<MuellerMatrix> {
        let omega = crate::coherence::diffusivity_from_coherence(theta, lambda)?;
        Ok(match self {
            Material::Grating(g) => g.eval_bundle(wi, wo, lambda, &omega),
            Material::HarveyShack(_) => gauss_hermite_blur(wi, &omega, |w| self.eval(w, wo, lambda)),
            _ => self.eval(wi, wo, lambda),
        })
    }
}

fn dielectric_sides(ior: &RefractiveIndex, wo: Vec3, lambda: f64) -> (f64, f64, f64) {
    let eta = ior.eval(lambda).re;
    if wo.z >= 0.0 {
        (1.0, eta, wo.z.min(1.0))
    } else {
        (eta, 1.0, (-wo.z).min(1.0))
    }
}

fn sample_dielectric(ior: &RefractiveIndex, wo: Vec3, lambda: f64, u: f64) -> Option<DirectionSample> {
    if wo.z == 0.0 {
        return None;
    }
    let (eta_i, eta_t, cos_o) = dielectric_sides(ior, wo, lambda);
    let f = fresnel_mueller(cos_o, eta_i, num_complex::Complex64::new(eta_t, 0.0));
    let r = f.reflect.m00();
    let t = f.transmit.m00();
    let p_r = if r + t > 0.0 { r / (r + t) } else { 1.0 };
    if u < p_r {
        Some(DirectionSample {
            wi: specular(wo),
            pdf: 0.0,
            choice_prob: p_r,
            weight: f.reflect.scale(1.0 / p_r),
            lobe: Lobe::DeltaReflect,
        })
    } else {
        let wi = refract(wo, eta_i / eta_t)?;
        Some(DirectionSample {
            wi,
            pdf: 0.0,
            choice_prob: 1.0 - p_r,
            weight: f.transmit.scale(1.0 / (1.0 - p_r)),
            lobe: Lobe::DeltaRefract,
        })
    }
}

/// Mirror direction about `+z`.
pub fn specular(w: Vec3) -> Vec3 {
    Vec3::new(-w.x, -w.y, w.z)
}

/// Refracts `w` (pointing away from the interface on its side) through the
/// interface with relative index `eta = η_side(w) / η_other`. The result
/// points away from the interface on the other side.
pub fn refract(w: Vec3, eta: f64) -> Option<Vec3> {
    let cos_i = w.z.abs();
    let sin2_t = eta * eta * (1.0 - cos_i * cos_i);
    if sin2_t >= 1.0 {
        return None;
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    let sign = if w.z > 0.0 { -1.0 } else { 1.0 };
    Some(Vec3::new(-eta * w.x, -eta * w.y, sign * cos_t).normalized())
}

pub fn cosine_hemisphere(u1: f64, u2: f64) -> Vec3 {
    let r = u1.sqrt();
    let phi = 2.0 * PI * u2;
    Vec3::new(r * phi.cos(), r * phi.sin(), (1.0 - u1).max(0.0).sqrt())
}

/// Mueller matrix of a mirror-like reflection about unit normal `h`, with
/// Fresnel response `f` given in the s/p frame of `h`, re-expressed in the
/// surface frames of `wi` and `wo`.
pub(crate) fn reflect_about(h: Vec3, wi: Vec3, wo: Vec3, f: MuellerMatrix) -> MuellerMatrix {
    let d_in = -wi;
    let into = frame_rotation(s_axis(Vec3::Z, d_in), s_axis(h, d_in), d_in);
    let out = frame_rotation(s_axis(h, wo), s_axis(Vec3::Z, wo), wo);
    out * f * into
}

const GH_NODES: [f64; 5] = [
    -2.020_182_870_456_085_6,
    -0.958_572_464_613_818_5,
    0.0,
    0.958_572_464_613_818_5,
    2.020_182_870_456_085_6,
];
const GH_WEIGHTS: [f64; 5] = [
    0.019_953_242_059_045_91,
    0.393_619_323_152_241_2,
    0.945_308_720_482_941_9,
    0.393_619_323_152_241_2,
    0.019_953_242_059_045_91,
];

/// 5×5 Gauss–Hermite average of `f` over incident directions perturbed
/// about `wi` with transverse covariance `omega`.
fn gauss_hermite_blur(wi: Vec3, omega: &Sym2, f: impl Fn(Vec3) -> MuellerMatrix) -> MuellerMatrix {
    let Some(l) = omega.cholesky() else {
        return f(wi);
    };
    let e1 = crate::polarimetry::perpendicular(wi);
    let e2 = wi.cross(e1);
    let mut acc = MuellerMatrix::ZERO;
    let s2 = std::f64::consts::SQRT_2;
    for (i, xi) in GH_NODES.iter().enumerate() {
        for (j, xj) in GH_NODES.iter().enumerate() {
            let (z1, z2) = (s2 * xi, s2 * xj);
            let v1 = l[0][0] * z1;
            let v2 = l[1][0] * z1 + l[1][1] * z2;
            let w = (wi + e1 * v1 + e2 * v2).normalized();
            let weight = GH_WEIGHTS[i] * GH_WEIGHTS[j] / PI;
            acc = acc.add(&f(w).scale(weight));
        }
    }
    acc
}
