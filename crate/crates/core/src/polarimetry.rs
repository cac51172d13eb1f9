//! Stokes vectors, Mueller matrices and Fresnel interfaces.
//!
//! Stokes components are expressed relative to a reference x-axis that is
//! perpendicular to the propagation direction; `s1 = I_x - I_y`. At a surface
//! the natural frame is the s/p frame of the plane of incidence, with the
//! x-axis along `n × d` (the s direction).

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::math::Vec3;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StokesVector(pub [f64; 4]);

impl StokesVector {
    pub const ZERO: StokesVector = StokesVector([0.0; 4]);

    pub fn unpolarized(s0: f64) -> Self {
        StokesVector([s0, 0.0, 0.0, 0.0])
    }

    pub fn s0(&self) -> f64 {
        self.0[0]
    }

    pub fn polarized_intensity(&self) -> f64 {
        (self.0[1] * self.0[1] + self.0[2] * self.0[2] + self.0[3] * self.0[3]).sqrt()
    }

    pub fn degree_of_polarization(&self) -> f64 {
        if self.0[0] > 0.0 {
            self.polarized_intensity() / self.0[0]
        } else {
            0.0
        }
    }

    /// `s0 ≥ 0` and `|(s1,s2,s3)| ≤ s0`, both up to a relative tolerance.
    pub fn is_physical(&self, tol: f64) -> bool {
        let s0 = self.0[0];
        s0 >= -tol && self.polarized_intensity() <= s0 + tol * s0.abs().max(1.0)
    }

    pub fn scale(&self, k: f64) -> Self {
        StokesVector(self.0.map(|c| c * k))
    }
}

impl Add for StokesVector {
    type Output = StokesVector;
    fn add(self, o: StokesVector) -> StokesVector {
        let mut r = self.0;
        for (a, b) in r.iter_mut().zip(o.0) {
            *a += b;
        }
        StokesVector(r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuellerMatrix(pub [[f64; 4]; 4]);

impl Default for MuellerMatrix {
    fn default() -> Self {
        MuellerMatrix::ZERO
    }
}

impl MuellerMatrix {
    pub const ZERO: MuellerMatrix = MuellerMatrix([[0.0; 4]; 4]);
    pub const IDENTITY: MuellerMatrix = MuellerMatrix([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]);

    /// Ideal depolarizer with intensity transmittance `k`.
    pub fn depolarizer(k: f64) -> Self {
        let mut m = MuellerMatrix::ZERO;
        m.0[0][0] = k;
        m
    }

    /// Non-polarizing attenuator.
    pub fn scalar(k: f64) -> Self {
        MuellerMatrix::IDENTITY.scale(k)
    }

    /// Mueller matrix of the diagonal Jones matrix `diag(a_s, a_p)`.
    pub fn from_amplitudes(a_s: Complex64, a_p: Complex64) -> Self {
        let rs = a_s.norm_sqr();
        let rp = a_p.norm_sqr();
        let c = a_s * a_p.conj();
        let (re, im) = (c.re, c.im);
        MuellerMatrix([
            [0.5 * (rs + rp), 0.5 * (rs - rp), 0.0, 0.0],
            [0.5 * (rs - rp), 0.5 * (rs + rp), 0.0, 0.0],
            [0.0, 0.0, re, im],
            [0.0, 0.0, -im, re],
        ])
    }

    /// Change of Stokes reference frame by an angle `phi` about the propagation axis.
    pub fn rotation(phi: f64) -> Self {
        let (s, c) = (2.0 * phi).sin_cos();
        MuellerMatrix([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, c, s, 0.0],
            [0.0, -s, c, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ])
    }

    pub fn m00(&self) -> f64 {
        self.0[0][0]
    }

    pub fn scale(&self, k: f64) -> Self {
        MuellerMatrix(self.0.map(|r| r.map(|c| c * k)))
    }

    pub fn add(&self, o: &MuellerMatrix) -> Self {
        let mut r = self.0;
        for i in 0..4 {
            for j in 0..4 {
                r[i][j] += o.0[i][j];
            }
        }
        MuellerMatrix(r)
    }

    pub fn apply(&self, s: &StokesVector) -> StokesVector {
        let mut r = [0.0; 4];
        for (i, ri) in r.iter_mut().enumerate() {
            *ri = (0..4).map(|j| self.0[i][j] * s.0[j]).sum();
        }
        StokesVector(r)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|c| c.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(|&c| c == 0.0)
    }

    /// Checks that extremal Stokes inputs (unpolarized, the six fully
    /// polarized axis states and a set of oblique pure states) map to
    /// physical outputs.
    pub fn preserves_physicality(&self, tol: f64) -> bool {
        if self.0[0][0] < -tol {
            return false;
        }
        let mut inputs = vec![StokesVector::unpolarized(1.0)];
        for axis in 1..4 {
            for sign in [-1.0, 1.0] {
                let mut s = [1.0, 0.0, 0.0, 0.0];
                s[axis] = sign;
                inputs.push(StokesVector(s));
            }
        }
        for k in 0..64 {
            // Fibonacci lattice over the Poincaré sphere.
            let z = 1.0 - (2.0 * k as f64 + 1.0) / 64.0;
            let r = (1.0 - z * z).sqrt();
            let phi = k as f64 * 2.399_963_229_728_653;
            inputs.push(StokesVector([1.0, r * phi.cos(), r * phi.sin(), z]));
        }
        inputs.iter().all(|s| self.apply(s).is_physical(tol))
    }
}

impl Mul for MuellerMatrix {
    type Output = MuellerMatrix;
    fn mul(self, o: MuellerMatrix) -> MuellerMatrix {
        let mut r = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                r[i][j] = (0..4).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        MuellerMatrix(r)
    }
}

/// Signed angle that rotates reference axis `from` onto `to` about `dir`.
pub fn frame_angle(from: Vec3, to: Vec3, dir: Vec3) -> f64 {
    from.cross(to).dot(dir).atan2(from.dot(to))
}

/// Rotation taking Stokes components from reference axis `from` to `to`.
pub fn frame_rotation(from: Vec3, to: Vec3, dir: Vec3) -> MuellerMatrix {
    MuellerMatrix::rotation(frame_angle(from, to, dir))
}

/// The s-polarization axis for light travelling along `dir` at a surface
/// with normal `n`; falls back to any perpendicular at normal incidence.
pub fn s_axis(n: Vec3, dir: Vec3) -> Vec3 {
    let s = n.cross(dir);
    if s.length_squared() > 1e-20 {
        s.normalized()
    } else {
        perpendicular(dir)
    }
}

pub fn perpendicular(d: Vec3) -> Vec3 {
    let a = if d.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
    d.cross(a).normalized()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FresnelAmplitudes {
    pub r_s: Complex64,
    pub r_p: Complex64,
    pub t_s: Complex64,
    pub t_p: Complex64,
    pub cos_t: Complex64,
}

/// Complex Fresnel amplitudes for light in a medium of real index `eta_i`
/// meeting a medium of complex index `eta_t` at incidence cosine `cos_i`.
pub fn fresnel_amplitudes(cos_i: f64, eta_i: f64, eta_t: Complex64) -> FresnelAmplitudes {
    let cos_i = cos_i.clamp(0.0, 1.0);
    let sin2_i = 1.0 - cos_i * cos_i;
    let ratio = Complex64::new(eta_i, 0.0) / eta_t;
    let mut cos_t = (Complex64::new(1.0, 0.0) - ratio * ratio * sin2_i).sqrt();
    // Evanescent or absorbing branch: the field must decay into the medium.
    if cos_t.im < 0.0 {
        cos_t = -cos_t;
    }
    let ei = Complex64::new(eta_i, 0.0);
    let ci = Complex64::new(cos_i, 0.0);
    let r_s = (ei * ci - eta_t * cos_t) / (ei * ci + eta_t * cos_t);
    let r_p = (eta_t * ci - ei * cos_t) / (eta_t * ci + ei * cos_t);
    let t_s = (2.0 * ei * ci) / (ei * ci + eta_t * cos_t);
    let t_p = (2.0 * ei * ci) / (eta_t * ci + ei * cos_t);
    FresnelAmplitudes {
        r_s,
        r_p,
        t_s,
        t_p,
        cos_t,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FresnelMueller {
    pub reflect: MuellerMatrix,
    /// Transmitted power in the s/p frame, including the beam-area factor
    /// `Re(η_t cosθ_t) / (η_i cosθ_i)`, so that `reflect + transmit` conserves
    /// intensity for lossless interfaces.
    pub transmit: MuellerMatrix,
    pub cos_t: Complex64,
    pub total_internal_reflection: bool,
}

pub fn fresnel_mueller(cos_i: f64, eta_i: f64, eta_t: Complex64) -> FresnelMueller {
    let a = fresnel_amplitudes(cos_i, eta_i, eta_t);
    let reflect = MuellerMatrix::from_amplitudes(a.r_s, a.r_p);
    let sin2_t = (eta_i / eta_t.re).powi(2) * (1.0 - cos_i * cos_i);
    let tir = eta_t.im == 0.0 && sin2_t >= 1.0;
    let transmit = if tir || eta_t.im > 0.0 || cos_i <= 0.0 {
        MuellerMatrix::ZERO
    } else {
        let factor = (eta_t * a.cos_t).re / (eta_i * cos_i);
        MuellerMatrix::from_amplitudes(a.t_s, a.t_p).scale(factor)
    };
    FresnelMueller {
        reflect,
        transmit,
        cos_t: a.cos_t,
        total_internal_reflection: tir,
    }
}

/// Unpolarized Fresnel reflectance.
pub fn fresnel_reflectance(cos_i: f64, eta_i: f64, eta_t: Complex64) -> f64 {
    let a = fresnel_amplitudes(cos_i, eta_i, eta_t);
    0.5 * (a.r_s.norm_sqr() + a.r_p.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn normal_incidence_glass() {
        let f = fresnel_mueller(1.0, 1.0, c(1.5));
        assert!((f.reflect.m00() - 0.04).abs() < 1e-12);
        assert!((f.reflect.m00() + f.transmit.m00() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn brewster_angle_kills_p() {
        let theta = 1.5f64.atan();
        let a = fresnel_amplitudes(theta.cos(), 1.0, c(1.5));
        assert!(a.r_p.norm() < 1e-12);
        assert!(a.r_s.norm() > 0.1);
    }

    #[test]
    fn gold_like_normal_incidence() {
        let eta = Complex64::new(0.27, 2.78);
        // |(1 - η)/(1 + η)|² evaluated independently.
        let expected = ((1.0 - 0.27f64).powi(2) + 2.78f64.powi(2)) / ((1.27f64).powi(2) + 2.78f64.powi(2));
        let f = fresnel_mueller(1.0, 1.0, eta);
        assert!((f.reflect.m00() - expected).abs() < 1e-12);
        assert!((expected - 0.8844).abs() < 1e-3);
        assert!(f.transmit.is_zero());
    }

    #[test]
    fn total_internal_reflection() {
        let f = fresnel_mueller(0.2, 1.5, c(1.0));
        assert!(f.total_internal_reflection);
        assert!(f.transmit.is_zero());
        assert!((f.reflect.m00() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_composes() {
        let r = MuellerMatrix::rotation(0.3) * MuellerMatrix::rotation(-0.3);
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((r.0[i][j] - e).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn dielectric_energy_closure(cos_i in 0.0f64..1.0, n1 in 1.0f64..2.5, n2 in 1.0f64..2.5) {
            let f = fresnel_mueller(cos_i, n1, c(n2));
            if !f.total_internal_reflection && cos_i > 0.0 {
                prop_assert!((f.reflect.m00() + f.transmit.m00() - 1.0).abs() < 1e-12);
                // Row 1 too: each polarization is conserved separately.
                prop_assert!((f.reflect.0[0][1] + f.transmit.0[0][1]).abs() < 1e-12);
            }
        }

        #[test]
        fn fresnel_preserves_stokes_validity(cos_i in 0.0f64..1.0, n in 1.0f64..3.0, k in 0.0f64..4.0,
                                             s1 in -1.0f64..1.0, s2 in -1.0f64..1.0, s3 in -1.0f64..1.0,
                                             phi in -3.2f64..3.2) {
            let f = fresnel_mueller(cos_i, 1.0, Complex64::new(n, k));
            let norm = (s1 * s1 + s2 * s2 + s3 * s3).sqrt().max(1.0);
            let s = StokesVector([1.0, s1 / norm, s2 / norm, s3 / norm]);
            let m = MuellerMatrix::rotation(phi) * f.reflect * MuellerMatrix::rotation(-phi);
            prop_assert!(m.apply(&s).is_physical(1e-9));
            prop_assert!(f.transmit.apply(&s).is_physical(1e-9));
            prop_assert!(f.reflect.preserves_physicality(1e-9));
        }
    }
}
