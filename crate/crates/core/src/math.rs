//! Small fixed-size linear algebra used throughout the renderer.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

pub const PI: f64 = std::f64::consts::PI;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn splat(v: f64) -> Self {
        Vec3::new(v, v, v)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn length_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn length(self) -> f64 {
        self.length_squared().sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        self / self.length()
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn abs(self) -> Vec3 {
        Vec3::new(self.x.abs(), self.y.abs(), self.z.abs())
    }

    pub fn max_component(self) -> f64 {
        self.x.max(self.y).max(self.z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Mirror `self` (pointing away from the surface) about `n`.
    pub fn reflect(self, n: Vec3) -> Vec3 {
        n * (2.0 * self.dot(n)) - self
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            _ => &self.z,
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        self * (1.0 / s)
    }
}

/// Orthonormal tangent frame; `n` is the local +z axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub s: Vec3,
    pub t: Vec3,
    pub n: Vec3,
}

impl Frame {
    /// Builds a frame around `n` (Duff et al. branchless construction).
    pub fn from_normal(n: Vec3) -> Frame {
        let sign = 1f64.copysign(n.z);
        let a = -1.0 / (sign + n.z);
        let b = n.x * n.y * a;
        let s = Vec3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x);
        let t = Vec3::new(b, sign + n.y * n.y * a, -n.y);
        Frame { s, t, n }
    }

    /// Builds a frame around `n` whose `s` axis is the projection of `tangent`.
    pub fn with_tangent(n: Vec3, tangent: Vec3) -> Frame {
        let s = tangent - n * tangent.dot(n);
        if s.length_squared() < 1e-20 {
            return Frame::from_normal(n);
        }
        let s = s.normalized();
        Frame { s, t: n.cross(s), n }
    }

    pub fn to_local(&self, v: Vec3) -> Vec3 {
        Vec3::new(v.dot(self.s), v.dot(self.t), v.dot(self.n))
    }

    pub fn to_world(&self, v: Vec3) -> Vec3 {
        self.s * v.x + self.t * v.y + self.n * v.z
    }

    pub fn flipped(&self) -> Frame {
        Frame {
            s: self.s,
            t: -self.t,
            n: -self.n,
        }
    }
}

/// Symmetric 2x2 matrix `[[a, b], [b, c]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Sym2 {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Sym2 { a, b, c }
    }

    pub fn identity() -> Self {
        Sym2::new(1.0, 0.0, 1.0)
    }

    pub fn scalar(s: f64) -> Self {
        Sym2::new(s, 0.0, s)
    }

    pub fn diag(a: f64, c: f64) -> Self {
        Sym2::new(a, 0.0, c)
    }

    pub fn det(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    pub fn trace(&self) -> f64 {
        self.a + self.c
    }

    pub fn inverse(&self) -> Option<Sym2> {
        let d = self.det();
        if d.abs() <= f64::MIN_POSITIVE || !d.is_finite() {
            return None;
        }
        Some(Sym2::new(self.c / d, -self.b / d, self.a / d))
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2::new(self.a * s, self.b * s, self.c * s)
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.a + o.a, self.b + o.b, self.c + o.c)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * (self.a + self.c);
        let d = (0.25 * (self.a - self.c).powi(2) + self.b * self.b).sqrt();
        (m - d, m + d)
    }

    pub fn is_spd(&self) -> bool {
        self.a > 0.0 && self.det() > 0.0 && self.a.is_finite() && self.c.is_finite()
    }

    /// `J * self * J^T` for a general 2x2 `J = [[j00, j01], [j10, j11]]`.
    pub fn congruence(&self, j: [[f64; 2]; 2]) -> Sym2 {
        let m = [[self.a, self.b], [self.b, self.c]];
        let mut jm = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                jm[r][c] = j[r][0] * m[0][c] + j[r][1] * m[1][c];
            }
        }
        let e = |r: usize, c: usize| jm[r][0] * j[c][0] + jm[r][1] * j[c][1];
        Sym2::new(e(0, 0), 0.5 * (e(0, 1) + e(1, 0)), e(1, 1))
    }

    /// Quadratic form `v^T self v`.
    pub fn quad(&self, x: f64, y: f64) -> f64 {
        self.a * x * x + 2.0 * self.b * x * y + self.c * y * y
    }

    /// Lower Cholesky factor `[[l00, 0], [l10, l11]]`.
    pub fn cholesky(&self) -> Option<[[f64; 2]; 2]> {
        if !self.is_spd() {
            return None;
        }
        let l00 = self.a.sqrt();
        let l10 = self.b / l00;
        let l11 = (self.c - l10 * l10).sqrt();
        Some([[l00, 0.0], [l10, l11]])
    }
}

/// Normalized bivariate Gaussian density with covariance `cov` at offset `(x, y)`.
pub fn gaussian2(cov: &Sym2, x: f64, y: f64) -> f64 {
    let det = cov.det();
    match cov.inverse() {
        Some(inv) if det > 0.0 => (-0.5 * inv.quad(x, y)).exp() / (2.0 * PI * det.sqrt()),
        _ => 0.0,
    }
}

/// Splitmix64 finalizer, used to derive independent RNG seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_orthonormal() {
        for n in [Vec3::Z, -Vec3::Z, Vec3::new(0.3, -0.4, 0.866).normalized()] {
            let f = Frame::from_normal(n);
            assert!(f.s.dot(f.t).abs() < 1e-12);
            assert!(f.s.dot(f.n).abs() < 1e-12);
            assert!((f.s.cross(f.t) - f.n).length() < 1e-12);
            let v = Vec3::new(0.1, 0.2, 0.3);
            assert!((f.to_world(f.to_local(v)) - v).length() < 1e-12);
        }
    }

    #[test]
    fn sym2_inverse_and_congruence() {
        let m = Sym2::new(2.0, 0.5, 1.0);
        let inv = m.inverse().unwrap();
        assert!((inv.a * m.a + inv.b * m.b - 1.0).abs() < 1e-12);
        let r = m.congruence([[0.0, 1.0], [-1.0, 0.0]]);
        assert!((r.det() - m.det()).abs() < 1e-12);
        let (l0, l1) = m.eigenvalues();
        assert!((l0 * l1 - m.det()).abs() < 1e-12);
    }

    #[test]
    fn gaussian2_normalizes() {
        let cov = Sym2::new(0.3, 0.1, 0.2);
        let h = 0.02;
        let mut sum = 0.0;
        for i in -200..=200 {
            for j in -200..=200 {
                sum += gaussian2(&cov, i as f64 * h, j as f64 * h) * h * h;
            }
        }
        assert!((sum - 1.0).abs() < 1e-6);
    }
}
