//! Diffusivity `Ω` and coherence shape `Θ = λ²Ω⁻¹` of a partially coherent
//! ray bundle.
//!
//! `Ω` is an angular covariance in rad², expressed in a 2-D basis transverse
//! to the bundle axis. At an interface the basis is `(p, s)`: `s = n × d`
//! normalized and `p = s × d`. Areas and solid angles use the square root of
//! the determinant, so an isotropic `Ω = ωI` has solid-angle measure `ω`.

use crate::error::{Error, Result};
use crate::math::{gaussian2, mix64, Sym2, Vec3, PI};
use crate::polarimetry::{perpendicular, s_axis};

/// Constant sourcing area used for area emitters, in m² (10 mm²).
pub const AREA_SOURCE_AREA: f64 = 10e-6;

/// Angular spread added by a Lambertian bounce, rad² per axis.
pub const LAMBERTIAN_SPREAD: f64 = 1.0;

const MAX_EIGENVALUE: f64 = PI * PI;

/// `Θ = λ²Ω⁻¹`, `λ` in nm, result in m².
pub fn coherence_from_diffusivity(omega: &Sym2, lambda_nm: f64) -> Result<Sym2> {
    if !omega.is_spd() {
        return Err(Error::NotPositiveDefinite("diffusivity"));
    }
    let inv = omega.inverse().ok_or(Error::NotPositiveDefinite("diffusivity"))?;
    let l = lambda_nm * 1e-9;
    Ok(inv.scale(l * l))
}

/// `Ω = λ²Θ⁻¹`, the inverse relation.
pub fn diffusivity_from_coherence(theta: &Sym2, lambda_nm: f64) -> Result<Sym2> {
    if !theta.is_spd() {
        return Err(Error::NotPositiveDefinite("coherence shape"));
    }
    // The relation is an involution.
    coherence_from_diffusivity(theta, lambda_nm)
}

pub fn coherence_area(theta: &Sym2) -> f64 {
    theta.det().max(0.0).sqrt()
}

/// Isotropic diffusivity for a scalar solid angle: `Ω = (solid_angle/2)·I`.
pub fn isotropic_diffusivity(solid_angle: f64) -> Sym2 {
    Sym2::scalar(0.5 * solid_angle)
}

/// Orthonormal basis transverse to `d`; bundle covariances about `d` are
/// expressed in it.
pub fn transverse_basis(d: Vec3) -> (Vec3, Vec3) {
    let e1 = perpendicular(d);
    (e1, d.cross(e1))
}

/// Probability mass of the centred Gaussian `omega` inside the unit disk of
/// transverse direction cosines.
pub fn disk_mass(omega: &Sym2) -> f64 {
    let Some(inv) = omega.inverse() else {
        return 1.0;
    };
    if inv.b == 0.0 && inv.a == inv.c {
        return 1.0 - (-0.5 * inv.a).exp();
    }
    const N: usize = 64;
    let mut acc = 0.0;
    for i in 0..N {
        let phi = 2.0 * PI * (i as f64 + 0.5) / N as f64;
        let q = inv.quad(phi.cos(), phi.sin());
        acc += (1.0 - (-0.5 * q).exp()) / q;
    }
    acc / (N as f64 * omega.det().sqrt())
}

/// Solid-angle density of direction `w` under the angular profile of a
/// bundle about `axis` with covariance `omega`; `mass` is `disk_mass(omega)`.
pub fn angular_density(axis: Vec3, w: Vec3, omega: &Sym2, mass: f64) -> f64 {
    let c = axis.dot(w);
    if c <= 0.0 {
        return 0.0;
    }
    let (e1, e2) = transverse_basis(axis);
    gaussian2(omega, w.dot(e1), w.dot(e2)) * c / mass
}

/// Draws a direction from the angular profile about `axis`; the density is
/// `angular_density`. Rejected draws are redrawn from a hash of the inputs.
pub fn sample_angular(axis: Vec3, omega: &Sym2, u1: f64, u2: f64) -> Option<Vec3> {
    let l = omega.cholesky()?;
    let (e1, e2) = transverse_basis(axis);
    let (mut u1, mut u2) = (u1, u2);
    for attempt in 0..64u64 {
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        let (z1, z2) = (r * c, r * s);
        let v1 = l[0][0] * z1;
        let v2 = l[1][0] * z1 + l[1][1] * z2;
        let t2 = v1 * v1 + v2 * v2;
        if t2 < 1.0 {
            return Some(e1 * v1 + e2 * v2 + axis * (1.0 - t2).sqrt());
        }
        let h = mix64(u1.to_bits() ^ mix64(u2.to_bits() ^ attempt));
        u1 = (h >> 11) as f64 / (1u64 << 53) as f64;
        u2 = (mix64(h) >> 11) as f64 / (1u64 << 53) as f64;
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SourceKind {
    Distant,
    /// Sourcing area `a` (m²) first seen from distance `r1` (m).
    Area {
        a: f64,
        r1: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BundleState {
    /// Angular diffusivity at the current path distance.
    pub omega: Sym2,
    /// Transverse axis the first basis vector of `omega` refers to.
    pub axis: Vec3,
    pub path_distance: f64,
    pub source: SourceKind,
    pub lambda_nm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Interaction {
    SpecularReflect,
    /// Refraction from index `eta_i` into `eta_t`.
    SpecularRefract {
        eta_i: f64,
        eta_t: f64,
    },
    /// Adds an independent angular spread `sigma`, given in the outgoing
    /// `(p, s)` basis.
    Diffractive {
        sigma: Sym2,
    },
}

/// Local geometry of an interaction. Directions point along propagation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteractionFrame {
    pub normal: Vec3,
    pub d_in: Vec3,
    pub d_out: Vec3,
}

impl BundleState {
    pub fn source_distant(solid_angle: f64, lambda_nm: f64, axis: Vec3) -> Result<Self> {
        if !(solid_angle > 0.0) {
            return Err(Error::invalid(format!(
                "distant source needs a positive solid angle, got {solid_angle}"
            )));
        }
        Ok(BundleState {
            omega: isotropic_diffusivity(solid_angle),
            axis,
            path_distance: 0.0,
            source: SourceKind::Distant,
            lambda_nm,
        })
    }

    pub fn source_area(a: f64, r1: f64, lambda_nm: f64, axis: Vec3) -> Result<Self> {
        if !(a > 0.0) || !(r1 > 0.0) {
            return Err(Error::invalid("area source needs a > 0 and r1 > 0"));
        }
        Ok(BundleState {
            omega: isotropic_diffusivity(a / (r1 * r1)),
            axis,
            path_distance: r1,
            source: SourceKind::Area { a, r1 },
            lambda_nm,
        })
    }

    pub fn theta(&self) -> Result<Sym2> {
        coherence_from_diffusivity(&self.omega, self.lambda_nm)
    }

    pub fn coherence_area(&self) -> f64 {
        self.theta().map(|t| coherence_area(&t)).unwrap_or(0.0)
    }

    /// Free flight over `dr`. Bundles from area sources narrow angularly as
    /// `1/r²`; bundles from distant sources are unchanged.
    pub fn propagate_distance(&self, dr: f64) -> BundleState {
        let mut out = *self;
        if dr <= 0.0 {
            return out;
        }
        let r0 = self.path_distance;
        out.path_distance = r0 + dr;
        if let SourceKind::Area { .. } = self.source {
            if r0 > 0.0 {
                out.omega = self.omega.scale((r0 / (r0 + dr)).powi(2));
            }
        }
        out
    }

    pub fn transform_at_interaction(&self, kind: Interaction, frame: &InteractionFrame) -> BundleState {
        let s = s_axis(frame.normal, frame.d_in);
        let p_in = s.cross(frame.d_in);
        let p_out = s.cross(frame.d_out).normalized();
        // Express Ω in the incoming (p, s) basis.
        let phi = {
            let x = self.axis.dot(p_in);
            let y = self.axis.dot(s);
            y.atan2(x)
        };
        let (sn, cs) = phi.sin_cos();
        let local = self.omega.congruence([[cs, -sn], [sn, cs]]);
        let transformed = match kind {
            Interaction::SpecularReflect => local,
            Interaction::SpecularRefract { eta_i, eta_t } => {
                let cos_i = frame.normal.dot(frame.d_in).abs();
                let cos_t = frame.normal.dot(frame.d_out).abs().max(1e-9);
                let jp = eta_i * cos_i / (eta_t * cos_t);
                let js = eta_i / eta_t;
                local.congruence([[jp, 0.0], [0.0, js]])
            }
            Interaction::Diffractive { sigma } => local.add(&sigma),
        };
        BundleState {
            omega: clamp_spread(transformed),
            axis: p_out,
            ..*self
        }
    }
}

/// Clamps each eigenvalue at π². Clamping eigenvalue-wise keeps the
/// determinant monotone under added spread.
fn clamp_spread(m: Sym2) -> Sym2 {
    let (lo, hi) = m.eigenvalues();
    if hi <= MAX_EIGENVALUE {
        return m;
    }
    // Unit eigenvector of the larger eigenvalue.
    let (vx, vy) = if m.b.abs() > 1e-300 {
        let (x, y) = (m.b, hi - m.a);
        let n = (x * x + y * y).sqrt();
        (x / n, y / n)
    } else if m.a >= m.c {
        (1.0, 0.0)
    } else {
        (0.0, 1.0)
    };
    let l1 = MAX_EIGENVALUE;
    let l2 = lo.min(MAX_EIGENVALUE);
    Sym2::new(
        l1 * vx * vx + l2 * vy * vy,
        (l1 - l2) * vx * vy,
        l1 * vy * vy + l2 * vx * vx,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const L: f64 = 550.0;

    fn lm() -> f64 {
        L * 1e-9
    }

    #[test]
    fn sun_like_coherence_area() {
        let t = coherence_from_diffusivity(&Sym2::scalar(6.8e-5), L).unwrap();
        let a = coherence_area(&t);
        assert!((a - lm() * lm() / 6.8e-5).abs() < 1e-3 * a);
        assert!((a - 4.45e-9).abs() < 0.01e-9);
        assert!((a.sqrt() - 67e-6).abs() < 1e-6);
    }

    #[test]
    fn identity_and_diagonal_cases() {
        let l2 = lm() * lm();
        let t = coherence_from_diffusivity(&Sym2::scalar(l2), L).unwrap();
        assert!((t.a - 1.0).abs() < 1e-12 && t.b == 0.0 && (t.c - 1.0).abs() < 1e-12);
        let t = coherence_from_diffusivity(&Sym2::diag(1e-4, 3e-4), L).unwrap();
        assert!((t.a - l2 / 1e-4).abs() < 1e-20 && (t.c - l2 / 3e-4).abs() < 1e-20);
        assert!(coherence_from_diffusivity(&Sym2::diag(1.0, 0.0), L).is_err());
    }

    #[test]
    fn distant_sources() {
        let b = BundleState::source_distant(6.8e-5, L, Vec3::X).unwrap();
        let len = b.coherence_area().sqrt();
        assert!(len > 10e-6 && len < 100e-6, "{len}");
        let b2 = BundleState::source_distant(1.36e-4, L, Vec3::X).unwrap();
        assert!((b2.coherence_area() - 0.5 * b.coherence_area()).abs() < 1e-12 * b.coherence_area());
        assert!(BundleState::source_distant(0.0, L, Vec3::X).is_err());
        let moved = b.propagate_distance(123.0);
        assert_eq!(moved.omega, b.omega);
        assert_eq!(b.propagate_distance(0.0), b);
    }

    #[test]
    fn area_sources_grow_with_distance() {
        let b = BundleState::source_area(AREA_SOURCE_AREA, 1.0, L, Vec3::X).unwrap();
        assert!((2.0 * b.omega.det().sqrt() - 1e-5).abs() < 1e-15);
        let far = b.propagate_distance(1.0);
        assert!((far.coherence_area() / b.coherence_area() - 4.0).abs() < 1e-9);
        let big = BundleState::source_area(1e6, 1.0, L, Vec3::X).unwrap();
        assert!(big.coherence_area() < 1e-15);
    }

    fn frame() -> InteractionFrame {
        let d_in = Vec3::new(0.6, 0.0, -0.8);
        InteractionFrame {
            normal: Vec3::Z,
            d_in,
            d_out: Vec3::new(0.6, 0.0, 0.8),
        }
    }

    #[test]
    fn interactions() {
        let b = BundleState::source_distant(1e-3, L, Vec3::new(0.8, 0.0, 0.6)).unwrap();
        let b = BundleState {
            omega: Sym2::new(3e-4, 1e-4, 2e-4),
            ..b
        };
        let r = b.transform_at_interaction(Interaction::SpecularReflect, &frame());
        assert!((r.coherence_area() - b.coherence_area()).abs() < 1e-9 * b.coherence_area());
        let d = b.transform_at_interaction(Interaction::Diffractive { sigma: b.omega }, &frame());
        // Doubling Ω quarters det Θ, which halves the sqrt-det area.
        let (t0, t1) = (b.theta().unwrap().det(), d.theta().unwrap().det());
        assert!((t1 - 0.25 * t0).abs() < 1e-9 * t0);
        assert!((d.coherence_area() - 0.5 * b.coherence_area()).abs() < 1e-9 * b.coherence_area());
        let lam = b.transform_at_interaction(
            Interaction::Diffractive {
                sigma: Sym2::scalar(LAMBERTIAN_SPREAD),
            },
            &frame(),
        );
        assert!(lam.coherence_area() < 2.0 * lm() * lm());
    }

    fn arb_spd() -> impl Strategy<Value = Sym2> {
        (1e-6f64..1.0, 1e-6f64..1.0, -0.99f64..0.99).prop_map(|(a, c, rho)| Sym2::new(a, rho * (a * c).sqrt(), c))
    }

    proptest! {
        #[test]
        fn identity_holds(o in arb_spd(), l in 380.0f64..700.0) {
            let t = coherence_from_diffusivity(&o, l).unwrap();
            let ll = l * 1e-9;
            prop_assert!((coherence_area(&t) * o.det().sqrt() - ll * ll).abs() < 1e-9 * ll * ll);
        }

        #[test]
        fn sequences_stay_spd(o in arb_spd(), steps in proptest::collection::vec((0u8..3, arb_spd(), 1.0f64..2.0, 0.0f64..1.0), 1..8)) {
            let mut b = BundleState { omega: o, ..BundleState::source_area(1e-5, 0.5, L, Vec3::X).unwrap() };
            for (kind, sigma, eta, dist) in steps {
                let area = b.coherence_area();
                let moved = b.propagate_distance(dist);
                prop_assert!(moved.coherence_area() >= area * (1.0 - 1e-12));
                b = moved;
                let before = b.coherence_area();
                let kind = match kind {
                    0 => Interaction::SpecularReflect,
                    1 => Interaction::SpecularRefract { eta_i: 1.0, eta_t: eta },
                    _ => Interaction::Diffractive { sigma },
                };
                let d_out = if matches!(kind, Interaction::SpecularRefract { .. }) {
                    Vec3::new(0.6 / eta, 0.0, -(1.0 - 0.36 / (eta * eta)).sqrt())
                } else {
                    Vec3::new(0.6, 0.0, 0.8)
                };
                let f = InteractionFrame { d_out, ..frame() };
                b = b.transform_at_interaction(kind, &f);
                prop_assert!(b.omega.is_spd());
                prop_assert!(b.theta().unwrap().is_spd());
                if let Interaction::Diffractive { .. } = kind {
                    prop_assert!(b.coherence_area() <= before * (1.0 + 1e-12));
                }
            }
        }
    }
}
