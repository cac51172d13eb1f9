use super::{Aabb, Hit, Primitive, Ray};
use crate::math::Vec3;

const MAX_LEAF: usize = 4;
const BINS: usize = 12;
const TRAVERSAL_COST: f64 = 1.0;
const INTERSECT_COST: f64 = 1.0;

#[derive(Clone, Copy, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf: first index into `order`; interior: index of the second child
    /// (the first child follows the node directly).
    offset: usize,
    count: usize,
    axis: usize,
}

/// Binned-SAH bounding volume hierarchy over a primitive list.
#[derive(Clone, Debug, Default)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

struct Item {
    index: usize,
    bounds: Aabb,
    centroid: Vec3,
}

impl Bvh {
    pub fn build(prims: &[Primitive]) -> Bvh {
        let mut items: Vec<Item> = prims
            .iter()
            .enumerate()
            .map(|(index, p)| {
                let bounds = p.shape.bounds();
                Item {
                    index,
                    bounds,
                    centroid: bounds.centroid(),
                }
            })
            .collect();
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * prims.len()),
            order: Vec::with_capacity(prims.len()),
        };
        if !items.is_empty() {
            let n = items.len();
            bvh.build_node(&mut items, 0, n);
        }
        bvh
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes.first().map_or(Aabb::EMPTY, |n| n.bounds)
    }

    fn build_node(&mut self, items: &mut [Item], start: usize, end: usize) -> usize {
        let slice = &mut items[start..end];
        let bounds = slice.iter().fold(Aabb::EMPTY, |b, it| b.union(&it.bounds));
        let node_index = self.nodes.len();
        self.nodes.push(Node {
            bounds,
            offset: 0,
            count: 0,
            axis: 0,
        });
        let n = slice.len();

        let make_leaf = |bvh: &mut Bvh, slice: &[Item]| {
            let offset = bvh.order.len();
            bvh.order.extend(slice.iter().map(|it| it.index));
            bvh.nodes[node_index] = Node {
                bounds,
                offset,
                count: slice.len(),
                axis: 0,
            };
            node_index
        };
        if n <= MAX_LEAF {
            return make_leaf(self, slice);
        }

        let cb = slice.iter().fold(Aabb::EMPTY, |b, it| b.grow(it.centroid));
        let extent = cb.max - cb.min;
        let axis = if extent.x >= extent.y && extent.x >= extent.z {
            0
        } else if extent.y >= extent.z {
            1
        } else {
            2
        };
        if extent[axis] <= 0.0 {
            // Coincident centroids: split in the middle of the list.
            let mid = start + n / 2;
            self.nodes[node_index].axis = axis;
            self.build_node(items, start, mid);
            let right = self.build_node(items, mid, end);
            self.nodes[node_index].offset = right;
            return node_index;
        }

        let bin_of = |c: Vec3| (((c[axis] - cb.min[axis]) / extent[axis] * BINS as f64) as usize).min(BINS - 1);
        let mut counts = [0usize; BINS];
        let mut boxes = [Aabb::EMPTY; BINS];
        for it in slice.iter() {
            let b = bin_of(it.centroid);
            counts[b] += 1;
            boxes[b] = boxes[b].union(&it.bounds);
        }
        let mut best = (f64::INFINITY, 0usize);
        for split in 1..BINS {
            let (mut lb, mut lc) = (Aabb::EMPTY, 0);
            for i in 0..split {
                lb = lb.union(&boxes[i]);
                lc += counts[i];
            }
            let (mut rb, mut rc) = (Aabb::EMPTY, 0);
            for i in split..BINS {
                rb = rb.union(&boxes[i]);
                rc += counts[i];
            }
            if lc == 0 || rc == 0 {
                continue;
            }
            let cost = TRAVERSAL_COST
                + INTERSECT_COST * (lc as f64 * lb.surface_area() + rc as f64 * rb.surface_area())
                    / bounds.surface_area();
            if cost < best.0 {
                best = (cost, split);
            }
        }
        if best.1 == 0 {
            return make_leaf(self, slice);
        }

        // Partition in place by bin.
        let mut i = 0;
        let mut j = n;
        while i < j {
            if bin_of(slice[i].centroid) < best.1 {
                i += 1;
            } else {
                j -= 1;
                slice.swap(i, j);
            }
        }
        let mid = start + i;
        self.nodes[node_index].axis = axis;
        self.build_node(items, start, mid);
        let right = self.build_node(items, mid, end);
        self.nodes[node_index].offset = right;
        node_index
    }

    /// Nearest hit with `t` in `(RAY_EPSILON, t_max)`.
    pub fn intersect(&self, prims: &[Primitive], ray: &Ray, t_max: f64) -> Option<Hit> {
        let mut best: Option<(usize, f64)> = None;
        self.traverse(prims, ray, t_max, |i, t| {
            best = Some((i, t));
            false
        });
        best.map(|(i, t)| prims[i].hit(i, ray, t))
    }

    /// True if anything lies strictly between the origin and `t_max`.
    pub fn occluded(&self, prims: &[Primitive], ray: &Ray, t_max: f64) -> bool {
        let mut hit = false;
        self.traverse(prims, ray, t_max, |_, _| {
            hit = true;
            true
        });
        hit
    }

    /// Visits primitives front to back, shrinking the interval on each hit;
    /// `on_hit` returns true to stop.
    fn traverse(&self, prims: &[Primitive], ray: &Ray, t_max: f64, mut on_hit: impl FnMut(usize, f64) -> bool) {
        if self.nodes.is_empty() {
            return;
        }
        let inv = Vec3::new(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
        let neg = [ray.dir.x < 0.0, ray.dir.y < 0.0, ray.dir.z < 0.0];
        let mut t_best = t_max;
        let mut stack = [0usize; 64];
        let mut sp = 0;
        let mut node = 0;
        loop {
            let n = &self.nodes[node];
            if n.bounds.hit(ray.origin, inv, t_best).is_some() {
                if n.count > 0 {
                    for &pi in &self.order[n.offset..n.offset + n.count] {
                        if let Some(t) = prims[pi].shape.intersect(ray, t_best) {
                            t_best = t;
                            if on_hit(pi, t) {
                                return;
                            }
                        }
                    }
                } else {
                    let (first, second) = if neg[n.axis] {
                        (n.offset, node + 1)
                    } else {
                        (node + 1, n.offset)
                    };
                    stack[sp] = second;
                    sp += 1;
                    node = first;
                    continue;
                }
            }
            if sp == 0 {
                return;
            }
            sp -= 1;
            node = stack[sp];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{intersect_brute_force, Shape};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_pcg::Pcg64Mcg;

    fn random_scene(r: &mut Pcg64Mcg, n: usize) -> Vec<Primitive> {
        let mut v = || Vec3::new(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
        (0..n)
            .map(|i| {
                let c = v();
                let shape = if i % 7 == 0 {
                    Shape::Sphere {
                        center: c,
                        radius: 0.05 + 0.2 * (i % 3) as f64,
                    }
                } else {
                    let a = v() * 0.3;
                    let b = v() * 0.3;
                    Shape::Triangle {
                        v: [c, c + a, c + b],
                        tangent: a,
                    }
                };
                Primitive { shape, mesh: i % 3 }
            })
            .collect()
    }

    fn random_ray(r: &mut Pcg64Mcg) -> Ray {
        let o = Vec3::new(r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
        let d = Vec3::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        Ray::new(o, if d.length() > 1e-6 { d.normalized() } else { Vec3::X })
    }

    #[test]
    fn agrees_with_brute_force_on_many_rays() {
        let mut r = Pcg64Mcg::seed_from_u64(11);
        let prims = random_scene(&mut r, 500);
        let bvh = Bvh::build(&prims);
        for p in &prims {
            assert!(bvh.bounds().contains(&p.shape.bounds()));
        }
        let mut hits = 0;
        for _ in 0..10_000 {
            let ray = random_ray(&mut r);
            let a = bvh.intersect(&prims, &ray, f64::INFINITY);
            let b = intersect_brute_force(&prims, &ray);
            match (a, b) {
                (Some(a), Some(b)) => {
                    assert!(a.prim == b.prim || (a.t - b.t).abs() < 1e-12, "{a:?} vs {b:?}");
                    hits += 1;
                }
                (None, None) => {}
                other => panic!("{other:?}"),
            }
            assert_eq!(bvh.occluded(&prims, &ray, 1.5), b.is_some_and(|h| h.t < 1.5));
        }
        assert!(hits > 1000, "{hits}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn random_scenes_match_brute_force(seed in any::<u64>(), n in 1usize..80) {
            let mut r = Pcg64Mcg::seed_from_u64(seed);
            let prims = random_scene(&mut r, n);
            let bvh = Bvh::build(&prims);
            for _ in 0..100 {
                let ray = random_ray(&mut r);
                let a = bvh.intersect(&prims, &ray, f64::INFINITY).map(|h| h.t);
                let b = intersect_brute_force(&prims, &ray).map(|h| h.t);
                prop_assert_eq!(a, b);
            }
        }
    }
}
