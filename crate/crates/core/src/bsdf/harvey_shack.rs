use super::{reflect_about, specular, DirectionSample, Lobe};
use crate::math::{Vec3, PI};
use crate::polarimetry::{fresnel_mueller, MuellerMatrix};
use crate::spectral::RefractiveIndex;

/// Randomly rough surface with a K-correlation (ABC) height spectrum.
///
/// The surface spectrum is `PSD(f) = A / (1 + B²f²)^((C+1)/2)`; `A` follows
/// from the rms roughness, `σ² = 2πA / (B²(C−1))`.
#[derive(Clone, Debug)]
pub struct HarveyShack {
    /// rms height, m.
    pub sigma: f64,
    /// Correlation length `B`, m.
    pub corr_length: f64,
    /// Falloff exponent `C > 1`.
    pub exponent: f64,
    pub ior: RefractiveIndex,
}

impl HarveyShack {
    pub fn psd_amplitude(&self) -> f64 {
        self.sigma.powi(2) * self.corr_length.powi(2) * (self.exponent - 1.0) / (2.0 * PI)
    }

    /// Spectrum normalized to unit integral over the frequency plane, m².
    pub fn psd_normalized(&self, f: f64) -> f64 {
        let (b, c) = (self.corr_length, self.exponent);
        (c - 1.0) * b * b / (2.0 * PI) * (1.0 + b * b * f * f).powf(-0.5 * (c + 1.0))
    }

    fn roughness_exponent(&self, cos: f64, lambda_m: f64) -> f64 {
        (4.0 * PI * self.sigma * cos / lambda_m).powi(2)
    }

    /// Probability of choosing the specular lobe for exit cosine `cos_o`.
    pub fn specular_probability(&self, cos_o: f64, lambda: f64) -> f64 {
        (-self.roughness_exponent(cos_o, lambda * 1e-9)).exp()
    }

    fn scatter_factor(&self, cos_i: f64, cos_o: f64, lambda_m: f64) -> f64 {
        let q = |c: f64| -(-self.roughness_exponent(c, lambda_m)).exp_m1();
        q(cos_i).min(q(cos_o))
    }

    fn frequency(wi: Vec3, wo: Vec3, lambda_m: f64) -> f64 {
        ((wi.x + wo.x).powi(2) + (wi.y + wo.y).powi(2)).sqrt() / lambda_m
    }

    pub(super) fn eval(&self, wi: Vec3, wo: Vec3, lambda: f64) -> MuellerMatrix {
        let l = lambda * 1e-9;
        let q = self.scatter_factor(wi.z, wo.z, l);
        if q <= 0.0 {
            return MuellerMatrix::ZERO;
        }
        let psd = self.psd_normalized(Self::frequency(wi, wo, l));
        let h = (wi + wo).normalized();
        let f = fresnel_mueller(wi.dot(h).clamp(0.0, 1.0), 1.0, self.ior.eval(lambda)).reflect;
        reflect_about(h, wi, wo, f).scale(q * psd / (l * l))
    }

    pub(super) fn pdf(&self, wi: Vec3, wo: Vec3, lambda: f64) -> f64 {
        let l = lambda * 1e-9;
        let p_diffuse = 1.0 - self.specular_probability(wo.z, lambda);
        p_diffuse * self.psd_normalized(Self::frequency(wi, wo, l)) * wi.z / (l * l)
    }

    pub(super) fn specular_value(&self, wo: Vec3, lambda: f64) -> MuellerMatrix {
        let c = wo.z.clamp(0.0, 1.0);
        let f = fresnel_mueller(c, 1.0, self.ior.eval(lambda)).reflect;
        f.scale((-self.roughness_exponent(c, lambda * 1e-9)).exp())
    }

    pub(super) fn sample(&self, wo: Vec3, lambda: f64, u: [f64; 3]) -> Option<DirectionSample> {
        if wo.z <= 0.0 {
            return None;
        }
        let p_spec = self.specular_probability(wo.z, lambda);
        if u[0] < p_spec {
            let weight = self.specular_value(wo, lambda).scale(1.0 / p_spec);
            return Some(DirectionSample {
                wi: specular(wo),
                pdf: 0.0,
                choice_prob: p_spec,
                weight,
                lobe: Lobe::DeltaReflect,
            });
        }
        let l = lambda * 1e-9;
        let c = self.exponent;
        let f = ((1.0 - u[1]).powf(-2.0 / (c - 1.0)) - 1.0).max(0.0).sqrt() / self.corr_length;
        let phi = 2.0 * PI * u[2];
        let tx = l * f * phi.cos() - wo.x;
        let ty = l * f * phi.sin() - wo.y;
        let t2 = tx * tx + ty * ty;
        if t2 >= 1.0 {
            return None;
        }
        let wi = Vec3::new(tx, ty, (1.0 - t2).sqrt());
        let pdf = self.pdf(wi, wo, lambda);
        if pdf <= 0.0 {
            return None;
        }
        let value = self.eval(wi, wo, lambda);
        Some(DirectionSample {
            wi,
            pdf,
            choice_prob: 1.0 - p_spec,
            weight: value.scale(wi.z / pdf),
            lobe: Lobe::Glossy,
        })
    }
}
