//! Next-event estimation through chains of smooth specular interfaces.
//!
//! Chain vertices are found by Newton iteration on the tangential part of
//! the generalized half vector at every interface. Each vertex is moved in
//! its tangent plane and projected back onto its mesh.

use rand::Rng;

use super::path::{chain_lobe, material, Connection, ConnectionKind, Endpoint, PathVertex};
use crate::bsdf::Material;
use crate::geometry::{Primitive, Ray, Shape, RAY_EPSILON};
use crate::math::{Frame, Vec3};
use crate::scene::{EmitterKind, ManifoldHint, Scene};

/// Newton iterations per solve.
pub const MAX_ITERATIONS: usize = 20;
/// Constraint norm below which a solve counts as converged.
pub const TOLERANCE: f64 = 1e-5;
/// Cap on restarts when estimating the reciprocal solution probability.
pub const MAX_RESTARTS: usize = 32;
/// Newton keeps refining converged solutions down to this norm.
const POLISH: f64 = 1e-13;
const FD_STEP: f64 = 1e-7;
/// Seed jitter relative to the endpoint distance.
const JITTER: f64 = 0.01;

#[derive(Clone, Debug)]
pub struct ChainSolution {
    pub points: Vec<Vec3>,
    /// Surface frames at `points` with geometric normals.
    pub frames: Vec<Frame>,
    pub iterations: usize,
    pub residual: f64,
}

struct Surface<'a> {
    prims: Vec<&'a Primitive>,
    material: &'a Material,
}

impl<'a> Surface<'a> {
    fn new(scene: &'a Scene, mesh: usize) -> Self {
        Surface {
            prims: scene.prims.iter().filter(|p| p.mesh == mesh).collect(),
            material: material(scene, mesh),
        }
    }

    /// Closest point on the mesh and its frame.
    fn project(&self, q: Vec3) -> Option<(Vec3, Frame)> {
        let mut best: Option<(f64, Vec3, &Primitive)> = None;
        for prim in &self.prims {
            let c = match prim.shape {
                Shape::Triangle { v, .. } => closest_on_triangle(q, v[0], v[1], v[2]),
                Shape::Sphere { center, radius } => {
                    let d = q - center;
                    if d.length_squared() == 0.0 {
                        continue;
                    }
                    center + d.normalized() * radius
                }
            };
            let d2 = (c - q).length_squared();
            if best.as_ref().map_or(true, |b| d2 < b.0) {
                best = Some((d2, c, prim));
            }
        }
        best.map(|(_, c, prim)| (c, prim.shape.frame_at(c)))
    }

    /// Nearest intersection of `ray` with the mesh.
    fn intersect(&self, ray: &Ray) -> Option<Vec3> {
        let mut t_best = f64::INFINITY;
        for prim in &self.prims {
            if let Some(t) = prim.shape.intersect(ray, t_best) {
                t_best = t;
            }
        }
        t_best.is_finite().then(|| ray.at(t_best))
    }

    fn index(&self, lambda: f64) -> f64 {
        match self.material {
            Material::Dielectric { ior } => ior.eval(lambda).re,
            _ => 1.0,
        }
    }
}

fn closest_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let (d1, d2) = (ab.dot(ap), ac.dot(ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(bp), ac.dot(bp));
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(cp), ac.dot(cp));
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

struct Chain<'a> {
    surfaces: Vec<Surface<'a>>,
    /// Refractive index inside each surface at the solve wavelength.
    etas: Vec<f64>,
    x: Vec3,
    y: Vec3,
}

impl Chain<'_> {
    fn constraint(&self, pts: &[(Vec3, Frame)]) -> Vec<f64> {
        let k = pts.len();
        let mut c = Vec::with_capacity(2 * k);
        for (i, &(p, f)) in pts.iter().enumerate() {
            let prev = if i == 0 { self.x } else { pts[i - 1].0 };
            let next = if i + 1 == k { self.y } else { pts[i + 1].0 };
            let wa = (prev - p).normalized();
            let wb = (next - p).normalized();
            let side = |w: Vec3| if w.dot(f.n) > 0.0 { 1.0 } else { self.etas[i] };
            let h = if self.surfaces[i].material.is_transmissive() {
                wa * side(wa) + wb * side(wb)
            } else {
                wa + wb
            };
            c.push(h.dot(f.s));
            c.push(h.dot(f.t));
        }
        c
    }

    fn moved(&self, pts: &[(Vec3, Frame)], delta: &[f64], step: f64) -> Option<Vec<(Vec3, Frame)>> {
        pts.iter()
            .enumerate()
            .map(|(i, &(p, f))| {
                self.surfaces[i].project(p + f.s * (step * delta[2 * i]) + f.t * (step * delta[2 * i + 1]))
            })
            .collect()
    }

    fn newton(&self, mut pts: Vec<(Vec3, Frame)>) -> Option<ChainSolution> {
        let dim = 2 * pts.len();
        let max_step = (self.y - self.x).length();
        let mut c = self.constraint(&pts);
        let mut r = norm(&c);
        let mut iterations = 0;
        while iterations < MAX_ITERATIONS && r > POLISH {
            iterations += 1;
            let mut jac = vec![vec![0.0; dim]; dim];
            for j in 0..dim {
                let mut unit = vec![0.0; dim];
                unit[j] = 1.0;
                let cj = self.constraint(&self.moved(&pts, &unit, FD_STEP)?);
                for (row, (a, b)) in jac.iter_mut().zip(cj.iter().zip(&c)) {
                    row[j] = (a - b) / FD_STEP;
                }
            }
            let Some(mut delta) = solve_linear(jac, c.iter().map(|v| -v).collect()) else {
                break;
            };
            let len = norm(&delta);
            if len > max_step {
                delta.iter_mut().for_each(|d| *d *= max_step / len);
            }
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..8 {
                if let Some(cand) = self.moved(&pts, &delta, step) {
                    let cc = self.constraint(&cand);
                    let rc = norm(&cc);
                    if rc < r {
                        (pts, c, r, accepted) = (cand, cc, rc, true);
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (r < TOLERANCE).then(|| ChainSolution {
            points: pts.iter().map(|p| p.0).collect(),
            frames: pts.iter().map(|p| p.1).collect(),
            iterations,
            residual: r,
        })
    }

    /// Straight-line seed from `x` towards `y`, one point per surface.
    fn seed(&self) -> Option<Vec<(Vec3, Frame)>> {
        let k = self.surfaces.len();
        let mut origin = self.x;
        let mut pts = Vec::with_capacity(k);
        for (i, s) in self.surfaces.iter().enumerate() {
            let to_y = self.y - origin;
            let guess = match s.intersect(&Ray::new(origin, to_y.normalized())) {
                Some(p) => p,
                None => self.x + (self.y - self.x) * ((i + 1) as f64 / (k + 1) as f64),
            };
            let p = s.project(guess)?;
            origin = p.0;
            pts.push(p);
        }
        Some(pts)
    }

    fn jittered_seed(&self, rng: &mut impl Rng) -> Option<Vec<(Vec3, Frame)>> {
        let sigma = JITTER * (self.y - self.x).length();
        let base = self.seed()?;
        let delta: Vec<f64> = (0..2 * base.len())
            .map(|_| sigma * (2.0 * rng.gen::<f64>() - 1.0))
            .collect();
        self.moved(&base, &delta, 1.0)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn build_chain<'a>(scene: &'a Scene, meshes: &[usize], x: Vec3, y: Vec3, lambda: f64) -> Chain<'a> {
    let surfaces: Vec<Surface> = meshes.iter().map(|&m| Surface::new(scene, m)).collect();
    let etas = surfaces.iter().map(|s| s.index(lambda)).collect();
    Chain { surfaces, etas, x, y }
}

/// Solves for the specular chain through `meshes` connecting `x` to `y` at
/// wavelength `lambda`, starting Newton from `seed` (one point per mesh, or
/// the straight-line guess when empty).
pub fn solve_chain(
    scene: &Scene,
    meshes: &[usize],
    x: Vec3,
    y: Vec3,
    seed: &[Vec3],
    lambda: f64,
) -> Option<ChainSolution> {
    let chain = build_chain(scene, meshes, x, y, lambda);
    let start = if seed.is_empty() {
        chain.seed()?
    } else {
        seed.iter()
            .zip(&chain.surfaces)
            .map(|(&p, s)| s.project(p))
            .collect::<Option<Vec<_>>>()?
    };
    chain.newton(start)
}

fn same_solution(a: &ChainSolution, b: &ChainSolution, tol: f64) -> bool {
    a.points.iter().zip(&b.points).all(|(p, q)| (*p - *q).length() < tol)
}

/// First direction of the chain seen from `x`, after re-solving with `y` moved.
fn first_direction(chain: &Chain, from: &ChainSolution) -> Option<Vec3> {
    let start: Vec<(Vec3, Frame)> = from.points.iter().copied().zip(from.frames.iter().copied()).collect();
    let s = chain.newton(start)?;
    Some((s.points[0] - chain.x).normalized())
}

/// Next-event connection from scattering vertex `x` to the area emitter of
/// `hint` through its specular chain. The returned path starts at `x`.
pub(crate) fn connect(
    scene: &Scene,
    hint: &ManifoldHint,
    x: PathVertex,
    lambda: f64,
    rng: &mut impl Rng,
) -> Option<Connection> {
    let emitter = &scene.emitters[hint.emitter];
    if !matches!(emitter.kind, EmitterKind::Area { .. }) {
        return None;
    }
    let (y, ny, pdf_area) = emitter.sample_point(&scene.prims, [rng.gen(), rng.gen(), rng.gen()])?;
    let mut chain = build_chain(scene, &hint.chain, x.position, y, lambda);
    let sol = chain.newton(chain.jittered_seed(rng)?)?;
    let k = sol.points.len();
    let dist = (y - x.position).length();

    // Geometry checks: interface sides, emitter facing and visibility.
    for i in 0..k {
        let p = sol.points[i];
        let prev = if i == 0 { x.position } else { sol.points[i - 1] };
        let next = if i + 1 == k { y } else { sol.points[i + 1] };
        let n = sol.frames[i].n;
        let crosses = ((prev - p).dot(n) > 0.0) != ((next - p).dot(n) > 0.0);
        if crosses != chain.surfaces[i].material.is_transmissive() {
            return None;
        }
    }
    if (sol.points[k - 1] - y).dot(ny) <= 0.0 {
        return None;
    }
    let nodes: Vec<Vec3> = std::iter::once(x.position)
        .chain(sol.points.iter().copied())
        .chain(std::iter::once(y))
        .collect();
    for w in nodes.windows(2) {
        let d = w[1] - w[0];
        let len = d.length();
        if len <= 2.0 * RAY_EPSILON || scene.occluded(&Ray::new(w[0], d / len), len - RAY_EPSILON) {
            return None;
        }
    }

    // Solid angle at x per unit emitter area, by central differences.
    let omega = (sol.points[0] - x.position).normalized();
    let fy = Frame::from_normal(ny);
    let h = 1e-5 * dist;
    let mut derivs = [Vec3::ZERO; 2];
    for (d, axis) in derivs.iter_mut().zip([fy.s, fy.t]) {
        chain.y = y + axis * h;
        let plus = first_direction(&chain, &sol)?;
        chain.y = y - axis * h;
        let minus = first_direction(&chain, &sol)?;
        *d = (plus - minus) / (2.0 * h);
    }
    chain.y = y;
    let jacobian = derivs[0].cross(derivs[1]).dot(omega).abs();

    // Restarts until the same solution reappears estimate its inverse probability.
    let tol = 1e-6 * dist.max(1e-3);
    let mut inv_prob = 1.0;
    while (inv_prob as usize) < MAX_RESTARTS {
        let again = chain.jittered_seed(rng).and_then(|s| chain.newton(s));
        if again.is_some_and(|a| same_solution(&a, &sol, tol)) {
            break;
        }
        inv_prob += 1.0;
    }

    let cos_x = omega.dot(x.frame.n).abs();
    let mut vertices = vec![PathVertex {
        wi: omega,
        scale: cos_x * jacobian * inv_prob / pdf_area,
        ..x
    }];
    for i in 0..k {
        let p = sol.points[i];
        let wo = (nodes[i] - p).normalized();
        let wi = (nodes[i + 2] - p).normalized();
        let surface = &chain.surfaces[i];
        let mut frame = sol.frames[i];
        if !surface.material.is_transmissive() && frame.n.dot(wo) < 0.0 {
            frame = frame.flipped();
        }
        vertices.push(PathVertex {
            position: p,
            frame,
            mesh: hint.chain[i],
            wo,
            wi,
            lobe: chain_lobe(surface.material),
            scale: 1.0,
        });
    }
    Some(Connection {
        vertices,
        endpoint: Endpoint::Emitter {
            emitter: hint.emitter,
            profile: 1.0,
            distance: (y - sol.points[k - 1]).length(),
        },
        kind: ConnectionKind::Manifold,
        weight: 1.0,
    })
}
