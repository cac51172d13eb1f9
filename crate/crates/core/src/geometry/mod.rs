//! Primitives, rays and the bounding-volume hierarchy.

mod bvh;

pub use bvh::Bvh;

use crate::math::{Frame, Vec3};

/// Minimum accepted ray parameter, in scene units.
pub const RAY_EPSILON: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3) -> Self {
        Ray { origin, dir }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        max: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn grow(&self, p: Vec3) -> Aabb {
        Aabb {
            min: self.min.min(p),
            max: self.max.max(p),
        }
    }

    pub fn centroid(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let d = self.max - self.min;
        2.0 * (d.x * d.y + d.y * d.z + d.z * d.x)
    }

    pub fn contains(&self, o: &Aabb) -> bool {
        (0..3).all(|i| self.min[i] <= o.min[i] && self.max[i] >= o.max[i])
    }

    /// Slab test; returns the entry parameter if the box is hit within `(0, t_max)`.
    pub fn hit(&self, origin: Vec3, inv_dir: Vec3, t_max: f64) -> Option<f64> {
        let mut t0: f64 = 0.0;
        let mut t1 = t_max;
        for i in 0..3 {
            let a = (self.min[i] - origin[i]) * inv_dir[i];
            let b = (self.max[i] - origin[i]) * inv_dir[i];
            let (near, far) = if a < b { (a, b) } else { (b, a) };
            // NaN from 0·∞ falls through the comparisons and leaves the interval unchanged.
            if near > t0 {
                t0 = near;
            }
            if far < t1 {
                t1 = far;
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    /// Vertices in counter-clockwise order seen from the front; `tangent`
    /// orients anisotropic materials.
    Triangle {
        v: [Vec3; 3],
        tangent: Vec3,
    },
    Sphere {
        center: Vec3,
        radius: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    pub mesh: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub position: Vec3,
    /// Geometric normal on the front side of the surface.
    pub normal: Vec3,
    /// Shading frame around `normal`.
    pub frame: Frame,
    pub prim: usize,
    pub mesh: usize,
}

impl Shape {
    pub fn bounds(&self) -> Aabb {
        match *self {
            Shape::Triangle { v, .. } => Aabb::EMPTY.grow(v[0]).grow(v[1]).grow(v[2]),
            Shape::Sphere { center, radius } => Aabb {
                min: center - Vec3::splat(radius),
                max: center + Vec3::splat(radius),
            },
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Shape::Triangle { v, .. } => 0.5 * (v[1] - v[0]).cross(v[2] - v[0]).length(),
            Shape::Sphere { radius, .. } => 4.0 * crate::math::PI * radius * radius,
        }
    }

    /// Ray parameter of the nearest intersection in `(RAY_EPSILON, t_max)`.
    pub fn intersect(&self, ray: &Ray, t_max: f64) -> Option<f64> {
        match *self {
            Shape::Triangle { v, .. } => {
                // Möller–Trumbore.
                let e1 = v[1] - v[0];
                let e2 = v[2] - v[0];
                let p = ray.dir.cross(e2);
                let det = e1.dot(p);
                if det.abs() < 1e-14 {
                    return None;
                }
                let inv = 1.0 / det;
                let s = ray.origin - v[0];
                let u = s.dot(p) * inv;
                if !(0.0..=1.0).contains(&u) {
                    return None;
                }
                let q = s.cross(e1);
                let w = ray.dir.dot(q) * inv;
                if w < 0.0 || u + w > 1.0 {
                    return None;
                }
                let t = e2.dot(q) * inv;
                (t > RAY_EPSILON && t < t_max).then_some(t)
            }
            Shape::Sphere { center, radius } => {
                let oc = ray.origin - center;
                let b = oc.dot(ray.dir);
                let c = oc.length_squared() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                [-b - sq, -b + sq].into_iter().find(|&t| t > RAY_EPSILON && t < t_max)
            }
        }
    }

    pub fn normal_at(&self, p: Vec3) -> Vec3 {
        match *self {
            Shape::Triangle { v, .. } => (v[1] - v[0]).cross(v[2] - v[0]).normalized(),
            Shape::Sphere { center, .. } => (p - center).normalized(),
        }
    }

    pub fn frame_at(&self, p: Vec3) -> Frame {
        let n = self.normal_at(p);
        match *self {
            Shape::Triangle { tangent, .. } => Frame::with_tangent(n, tangent),
            Shape::Sphere { .. } => Frame::with_tangent(n, Vec3::Z.cross(n)),
        }
    }

    /// Uniform point on the surface and its normal.
    pub fn sample_point(&self, u1: f64, u2: f64) -> (Vec3, Vec3) {
        match *self {
            Shape::Triangle { v, .. } => {
                let s = u1.sqrt();
                let (b0, b1) = (1.0 - s, u2 * s);
                let p = v[0] * b0 + v[1] * b1 + v[2] * (1.0 - b0 - b1);
                (p, self.normal_at(p))
            }
            Shape::Sphere { center, radius } => {
                let z = 1.0 - 2.0 * u1;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = 2.0 * crate::math::PI * u2;
                let n = Vec3::new(r * phi.cos(), r * phi.sin(), z);
                (center + n * radius, n)
            }
        }
    }
}

impl Primitive {
    pub fn hit(&self, prim: usize, ray: &Ray, t: f64) -> Hit {
        let position = ray.at(t);
        let frame = self.shape.frame_at(position);
        Hit {
            t,
            position,
            normal: frame.n,
            frame,
            prim,
            mesh: self.mesh,
        }
    }
}

/// Nearest hit by testing every primitive; reference for the BVH.
pub fn intersect_brute_force(prims: &[Primitive], ray: &Ray) -> Option<Hit> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in prims.iter().enumerate() {
        let t_max = best.map_or(f64::INFINITY, |b| b.1);
        if let Some(t) = p.shape.intersect(ray, t_max) {
            best = Some((i, t));
        }
    }
    best.map(|(i, t)| prims[i].hit(i, ray, t))
}
