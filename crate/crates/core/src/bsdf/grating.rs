use super::{reflect_about, DirectionSample, Lobe};
use crate::coherence::{angular_density, disk_mass, sample_angular, transverse_basis};
use crate::math::{Sym2, Vec3, PI};
use crate::polarimetry::{fresnel_mueller, fresnel_reflectance, MuellerMatrix};
use crate::spectral::RefractiveIndex;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    Sinusoidal,
    /// Binary profile with 50% duty cycle.
    Rectangular,
    /// Blazed sawtooth, blazing towards positive orders.
    Triangular,
}

/// Reflective surface-relief grating on a smooth base material.
#[derive(Clone, Debug)]
pub struct Grating {
    pub profile: Profile,
    /// Period along the grating vector, m.
    pub period: f64,
    /// Period along the in-plane perpendicular for crossed gratings, m.
    pub period2: Option<f64>,
    /// Profile height, m (amplitude for sinusoidal, depth otherwise).
    pub height: f64,
    /// Angle of the grating vector from the local x axis, rad.
    pub orientation: f64,
    pub ior: RefractiveIndex,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GratingOrder {
    pub m: (i32, i32),
    pub dir: Vec3,
    pub efficiency: f64,
}

const MAX_ORDER: i32 = 64;

/// Squared Mahalanobis radius past which bundle terms are dropped.
const BUNDLE_CUTOFF: f64 = 60.0;

fn bessel_j(m: i32, x: f64) -> f64 {
    libm::jn(m, x)
}

/// `J_0..=J_n` at `x >= 0` by Miller's downward recurrence, normalized with
/// `J_0 + 2·(J_2 + J_4 + ...) = 1`.
fn bessel_table(n: i32, x: f64) -> Vec<f64> {
    let n = n.max(1) as usize;
    let mut j = vec![0.0; n + 1];
    if x == 0.0 {
        j[0] = 1.0;
        return j;
    }
    let start = (n.max(x.ceil() as usize) + 32) & !1;
    let (mut hi, mut cur) = (0.0, 1e-30);
    let mut norm = 0.0;
    for m in (1..=start).rev() {
        let lo = 2.0 * m as f64 / x * cur - hi;
        (hi, cur) = (cur, lo);
        if m - 1 <= n {
            j[m - 1] = lo;
        }
        if (m - 1) % 2 == 0 && m > 1 {
            norm += 2.0 * lo;
        }
        if cur.abs() > 1e250 {
            let s = 1e-250;
            (hi, cur, norm) = (hi * s, cur * s, norm * s);
            j.iter_mut().for_each(|v| *v *= s);
        }
    }
    norm += cur;
    j.iter_mut().for_each(|v| *v /= norm);
    j
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

impl Grating {
    /// Relative efficiency of order `m` along one axis for round-trip phase `phi`.
    fn raw(&self, m: i32, phi: f64) -> f64 {
        match self.profile {
            Profile::Sinusoidal => bessel_j(m, phi).powi(2),
            Profile::Rectangular => {
                if m == 0 {
                    (0.5 * phi).cos().powi(2)
                } else if m % 2 != 0 {
                    (2.0 / (PI * m as f64)).powi(2) * (0.5 * phi).sin().powi(2)
                } else {
                    0.0
                }
            }
            Profile::Triangular => sinc(phi / (2.0 * PI) - m as f64).powi(2),
        }
    }

    fn phase(&self, cos_i: f64, lambda: f64) -> f64 {
        2.0 * (2.0 * PI / (lambda * 1e-9)) * self.height * cos_i
    }

    fn max_orders(&self, lambda: f64) -> (i32, i32) {
        let l = lambda * 1e-9;
        let m1 = ((2.0 * self.period / l).ceil() as i32).min(MAX_ORDER);
        let m2 = self.period2.map_or(0, |p| ((2.0 * p / l).ceil() as i32).min(MAX_ORDER));
        (m1, m2)
    }

    /// In-plane momentum shift of order `m`, in direction cosines.
    fn shift(&self, m: (i32, i32), lambda: f64) -> (f64, f64) {
        let l = lambda * 1e-9;
        let (s, c) = self.orientation.sin_cos();
        let a = l * m.0 as f64 / self.period;
        let b = self.period2.map_or(0.0, |p| l * m.1 as f64 / p);
        (a * c - b * s, a * s + b * c)
    }

    /// Orders `m` whose in-plane direction `offset + shift(m)` lies inside
    /// the unit disc, i.e. that propagate.
    fn propagating(&self, offset: (f64, f64), lambda: f64) -> Vec<(i32, i32)> {
        let (a, b) = self.max_orders(lambda);
        let l = lambda * 1e-9;
        let (s, c) = self.orientation.sin_cos();
        // Offset in the (grating vector, perpendicular) basis.
        let p0 = offset.0 * c + offset.1 * s;
        let q0 = -offset.0 * s + offset.1 * c;
        let du = l / self.period;
        let dv = self.period2.map_or(0.0, |p| l / p);
        let mut out = Vec::new();
        for i in -a..=a {
            let p = p0 + i as f64 * du;
            if p.abs() >= 1.0 {
                continue;
            }
            let (lo, hi) = if b == 0 {
                (0, 0)
            } else {
                let r = (1.0 - p * p).sqrt();
                let lo = ((-r - q0) / dv).floor() as i32;
                let hi = ((r - q0) / dv).ceil() as i32;
                (lo.max(-b), hi.min(b))
            };
            for j in lo..=hi {
                let (kx, ky) = self.shift((i, j), lambda);
                if hemisphere(offset.0 + kx, offset.1 + ky).is_some() {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Per-axis relative efficiencies for orders `-n..=n` at phase `phi`.
    fn raw_table(&self, n: i32, phi: f64) -> Vec<f64> {
        if self.profile != Profile::Sinusoidal {
            return (-n..=n).map(|m| self.raw(m, phi)).collect();
        }
        let j = bessel_table(n, phi);
        (-n..=n).map(|m| j[m.unsigned_abs() as usize].powi(2)).collect()
    }

    fn outgoing(&self, wi: Vec3, m: (i32, i32), lambda: f64) -> Option<Vec3> {
        let (kx, ky) = self.shift(m, lambda);
        hemisphere(-wi.x + kx, -wi.y + ky)
    }

    /// Efficiencies of the propagating orders for light arriving from `wi`,
    /// scaled so that they sum to the base Fresnel reflectance.
    fn efficiencies(&self, wi: Vec3, lambda: f64) -> Vec<((i32, i32), f64)> {
        let phi = self.phase(wi.z, lambda);
        let (a, b) = self.max_orders(lambda);
        let ta = self.raw_table(a, phi);
        let tb = if self.period2.is_some() {
            self.raw_table(b, phi)
        } else {
            vec![1.0]
        };
        let raw: Vec<((i32, i32), f64)> = self
            .propagating((-wi.x, -wi.y), lambda)
            .into_iter()
            .map(|m| (m, ta[(m.0 + a) as usize] * tb[(m.1 + b) as usize]))
            .collect();
        let total: f64 = raw.iter().map(|r| r.1).sum();
        let r = fresnel_reflectance(wi.z, 1.0, self.ior.eval(lambda));
        let scale = if total > 0.0 { r / total } else { 0.0 };
        raw.into_iter().map(|(m, e)| (m, e * scale)).collect()
    }

    /// Propagating reflected orders for light arriving from `wi`.
    pub fn orders(&self, wi: Vec3, lambda: f64) -> Vec<GratingOrder> {
        if wi.z <= 0.0 {
            return Vec::new();
        }
        self.efficiencies(wi, lambda)
            .into_iter()
            .filter_map(|(m, efficiency)| {
                Some(GratingOrder {
                    m,
                    dir: self.outgoing(wi, m, lambda)?,
                    efficiency,
                })
            })
            .collect()
    }

    pub fn efficiency(&self, wi: Vec3, m: (i32, i32), lambda: f64) -> f64 {
        if wi.z <= 0.0 || self.outgoing(wi, m, lambda).is_none() {
            return 0.0;
        }
        self.efficiencies(wi, lambda)
            .into_iter()
            .find(|e| e.0 == m)
            .map_or(0.0, |e| e.1)
    }

    /// Incident direction that order `m` sends into `wo`.
    pub fn incident_for(&self, wo: Vec3, m: (i32, i32), lambda: f64) -> Option<Vec3> {
        let (kx, ky) = self.shift(m, lambda);
        hemisphere(kx - wo.x, ky - wo.y)
    }

    /// Orders reaching `wo`: `dir` is the incident direction of each order.
    pub fn incident_orders(&self, wo: Vec3, lambda: f64) -> Vec<GratingOrder> {
        if wo.z <= 0.0 {
            return Vec::new();
        }
        // Light arriving along order m's incident direction leaves in order
        // m + n for exactly the n with wo + shift(n) propagating, so that set
        // is shared by every candidate.
        let offsets = self.propagating((wo.x, wo.y), lambda);
        let (a, b) = self.max_orders(lambda);
        let crossed = self.period2.is_some();
        self.propagating((-wo.x, -wo.y), lambda)
            .into_iter()
            .filter_map(|m| {
                let wi = self.incident_for(wo, m, lambda)?;
                let phi = self.phase(wi.z, lambda);
                // Both axes share the profile, so one table serves both.
                let n = a.max(b);
                let t = self.raw_table(n, phi);
                let at = |i: i32, j: i32| {
                    let x = t.get((i + n) as usize).copied().unwrap_or(0.0);
                    let y = if crossed {
                        t.get((j + n) as usize).copied().unwrap_or(0.0)
                    } else {
                        1.0
                    };
                    x * y
                };
                let total: f64 = offsets.iter().map(|n| at(m.0 + n.0, m.1 + n.1)).sum();
                if total <= 0.0 {
                    return None;
                }
                let efficiency = fresnel_reflectance(wi.z, 1.0, self.ior.eval(lambda)) * at(m.0, m.1) / total;
                (efficiency > 0.0).then_some(GratingOrder { m, dir: wi, efficiency })
            })
            .collect()
    }

    /// Mueller throughput of order `m` from `wi` into `wo`.
    pub fn order_value(&self, m: (i32, i32), wi: Vec3, wo: Vec3, lambda: f64) -> MuellerMatrix {
        let e = self.efficiency(wi, m, lambda);
        self.order_mueller(e, wi, wo, lambda)
    }

    fn order_mueller(&self, efficiency: f64, wi: Vec3, wo: Vec3, lambda: f64) -> MuellerMatrix {
        if efficiency <= 0.0 {
            return MuellerMatrix::ZERO;
        }
        let f = fresnel_mueller(wi.z.min(1.0), 1.0, self.ior.eval(lambda)).reflect;
        let r = f.m00();
        if r <= 0.0 {
            return MuellerMatrix::ZERO;
        }
        let h = (wi + wo).normalized();
        reflect_about(h, wi, wo, f).scale(efficiency / r)
    }

    /// Picks one order reaching `wo` with probability proportional to its efficiency.
    pub(super) fn sample(&self, wo: Vec3, lambda: f64, u: f64) -> Option<DirectionSample> {
        let orders = self.incident_orders(wo, lambda);
        let o = pick(&orders, u)?;
        let total: f64 = orders.iter().map(|o| o.efficiency).sum();
        let p = o.efficiency / total;
        Some(DirectionSample {
            wi: o.dir,
            pdf: 0.0,
            choice_prob: p,
            weight: self.order_mueller(o.efficiency, o.dir, wo, lambda).scale(1.0 / p),
            lobe: Lobe::GratingOrder(o.m.0, o.m.1),
        })
    }

    /// Response to a bundle centred on `c` with transverse angular covariance
    /// `omega`, per unit irradiance on the surface. Each order contributes its
    /// throughput times the bundle's density at the order's incident direction.
    pub fn eval_bundle(&self, c: Vec3, wo: Vec3, lambda: f64, omega: &Sym2) -> MuellerMatrix {
        self.bundle_terms(c, wo, lambda, omega)
            .into_iter()
            .fold(MuellerMatrix::ZERO, |acc, (_, m)| acc.add(&m))
    }

    /// The non-zero per-order terms of `eval_bundle`, each with the incident
    /// direction of its order.
    pub fn bundle_terms(&self, c: Vec3, wo: Vec3, lambda: f64, omega: &Sym2) -> Vec<(Vec3, MuellerMatrix)> {
        if c.z <= 0.0 || wo.z <= 0.0 {
            return Vec::new();
        }
        let (Some(inv), det) = (omega.inverse(), omega.det()) else {
            return Vec::new();
        };
        let norm = 1.0 / (2.0 * PI * det.sqrt() * disk_mass(omega));
        let (e1, e2) = transverse_basis(c);
        let mut out = Vec::new();
        for o in self.incident_orders(wo, lambda) {
            if o.dir.dot(c) <= 0.0 {
                continue;
            }
            // Orders beyond ~8 standard deviations carry less than 1e-13 of
            // the peak density.
            let q = inv.quad(o.dir.dot(e1), o.dir.dot(e2));
            if q > BUNDLE_CUTOFF {
                continue;
            }
            let g = (-0.5 * q).exp() * norm;
            if g > 0.0 {
                out.push((
                    o.dir,
                    self.order_mueller(o.efficiency, o.dir, wo, lambda).scale(g / c.z),
                ));
            }
        }
        out
    }

    /// Orders widened into Gaussian lobes of covariance `omega` about each
    /// incident order direction, as a BSDF in `wi`.
    pub fn lobe_eval(&self, wi: Vec3, wo: Vec3, lambda: f64, omega: &Sym2) -> MuellerMatrix {
        if wi.z <= 0.0 || wo.z <= 0.0 {
            return MuellerMatrix::ZERO;
        }
        let mass = disk_mass(omega);
        let mut acc = MuellerMatrix::ZERO;
        for o in self.incident_orders(wo, lambda) {
            let g = angular_density(o.dir, wi, omega, mass);
            if g > 0.0 {
                acc = acc.add(&self.order_mueller(o.efficiency, o.dir, wo, lambda).scale(g / wi.z));
            }
        }
        acc
    }

    pub fn lobe_pdf(&self, wi: Vec3, wo: Vec3, lambda: f64, omega: &Sym2) -> f64 {
        if wi.z <= 0.0 || wo.z <= 0.0 {
            return 0.0;
        }
        let orders = self.incident_orders(wo, lambda);
        let total: f64 = orders.iter().map(|o| o.efficiency).sum();
        if total <= 0.0 {
            return 0.0;
        }
        let mass = disk_mass(omega);
        orders
            .iter()
            .map(|o| o.efficiency / total * angular_density(o.dir, wi, omega, mass))
            .sum()
    }

    pub fn lobe_sample(&self, wo: Vec3, lambda: f64, omega: &Sym2, u: [f64; 3]) -> Option<DirectionSample> {
        let orders = self.incident_orders(wo, lambda);
        let o = pick(&orders, u[0])?;
        let wi = sample_angular(o.dir, omega, u[1], u[2])?;
        if wi.z <= 0.0 {
            return None;
        }
        let pdf = self.lobe_pdf(wi, wo, lambda, omega);
        let f = self.lobe_eval(wi, wo, lambda, omega);
        (pdf > 0.0).then(|| DirectionSample {
            wi,
            pdf,
            choice_prob: 1.0,
            weight: f.scale(wi.z / pdf),
            lobe: Lobe::Glossy,
        })
    }
}

fn hemisphere(x: f64, y: f64) -> Option<Vec3> {
    let t2 = x * x + y * y;
    (t2 < 1.0).then(|| Vec3::new(x, y, (1.0 - t2).sqrt()))
}

fn pick(orders: &[GratingOrder], u: f64) -> Option<&GratingOrder> {
    let total: f64 = orders.iter().map(|o| o.efficiency).sum();
    if total <= 0.0 {
        return None;
    }
    let mut acc = 0.0;
    let target = u * total;
    for o in orders {
        acc += o.efficiency;
        if target < acc {
            return Some(o);
        }
    }
    orders.iter().rev().find(|o| o.efficiency > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn cd(profile: Profile) -> Grating {
        Grating {
            profile,
            period: 1.6e-6,
            period2: None,
            height: 80e-9,
            orientation: 0.0,
            ior: RefractiveIndex::Constant(Complex64::new(1.2, 7.0)),
        }
    }

    #[test]
    fn cd_pitch_first_order_angle() {
        let g = cd(Profile::Sinusoidal);
        let orders = g.orders(Vec3::Z, 550.0);
        let ms: Vec<i32> = orders.iter().map(|o| o.m.0).collect();
        assert_eq!(ms, vec![-2, -1, 0, 1, 2]);
        let first = orders.iter().find(|o| o.m.0 == 1).unwrap();
        assert!((first.dir.x - 0.34375).abs() < 1e-12);
        let theta = first.dir.x.asin().to_degrees();
        assert!((theta - 20.11).abs() < 0.01, "{theta}");
    }

    #[test]
    fn zeroth_order_is_specular() {
        let g = cd(Profile::Rectangular);
        let wi = Vec3::new(0.3, -0.2, 0.0);
        let wi = Vec3::new(wi.x, wi.y, (1.0 - wi.length_squared()).sqrt());
        let o = g.orders(wi, 480.0).into_iter().find(|o| o.m == (0, 0)).unwrap();
        assert!((o.dir - super::super::specular(wi)).length() < 1e-15);
    }

    #[test]
    fn sub_half_wavelength_period_keeps_only_specular() {
        let mut g = cd(Profile::Sinusoidal);
        g.period = 250e-9;
        let orders = g.orders(Vec3::Z, 550.0);
        assert_eq!(orders.len(), 1);
        assert_eq!(orders[0].m, (0, 0));
    }

    #[test]
    fn efficiencies_sum_to_fresnel() {
        for profile in [Profile::Sinusoidal, Profile::Rectangular, Profile::Triangular] {
            let g = cd(profile);
            let wi = Vec3::new(0.5, 0.0, 0.75f64.sqrt());
            let sum: f64 = g.orders(wi, 600.0).iter().map(|o| o.efficiency).sum();
            let r = fresnel_reflectance(wi.z, 1.0, g.ior.eval(600.0));
            assert!((sum - r).abs() < 1e-12, "{profile:?}");
        }
    }

    #[test]
    fn incident_orders_invert_forward_map() {
        let mut g = cd(Profile::Triangular);
        g.period2 = Some(2.1e-6);
        g.orientation = 0.4;
        let wo = Vec3::new(0.1, 0.35, 0.0);
        let wo = Vec3::new(wo.x, wo.y, (1.0 - wo.length_squared()).sqrt());
        for o in g.incident_orders(wo, 520.0) {
            let fwd = g.outgoing(o.dir, o.m, 520.0).unwrap();
            assert!((fwd - wo).length() < 1e-12);
        }
    }

    #[test]
    fn incident_order_efficiencies_match_forward_ones() {
        for profile in [Profile::Sinusoidal, Profile::Rectangular, Profile::Triangular] {
            let mut g = cd(profile);
            g.period2 = Some(2.4e-6);
            g.height = 3e-7;
            g.orientation = 0.3;
            let wo = Vec3::new(-0.2, 0.15, 0.0);
            let wo = Vec3::new(wo.x, wo.y, (1.0 - wo.length_squared()).sqrt());
            let orders = g.incident_orders(wo, 480.0);
            assert!(orders.len() > 10);
            for o in orders {
                let e = g.efficiency(o.dir, o.m, 480.0);
                assert!((o.efficiency - e).abs() < 1e-12, "{:?} {} {e}", o.m, o.efficiency);
            }
        }
    }

    #[test]
    fn bessel_table_matches_direct_evaluation() {
        for x in [0.0, 1e-3, 0.7, 3.0, 9.5, 25.0] {
            let t = bessel_table(30, x);
            for (m, v) in t.iter().enumerate() {
                assert!((v - bessel_j(m as i32, x)).abs() < 1e-12, "{m} {x}");
            }
        }
    }

    #[test]
    fn disk_mass_matches_isotropic_closed_form() {
        let iso = Sym2::scalar(0.3);
        let aniso = Sym2::new(0.3, 1e-9, 0.3);
        assert!((disk_mass(&iso) - disk_mass(&aniso)).abs() < 1e-8);
        assert!((disk_mass(&Sym2::scalar(1e-4)) - 1.0).abs() < 1e-12);
    }
}
