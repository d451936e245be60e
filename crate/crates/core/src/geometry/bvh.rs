use nalgebra::{Point3, Vector3};

use super::TriangleMesh;

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit {
    pub t: f64,
    pub tri: u32,
    /// Barycentrics of the hit (weights of the triangle's three corners).
    pub bary: [f64; 3],
}

#[derive(Clone, Debug)]
struct Node {
    lo: Point3<f64>,
    hi: Point3<f64>,
    /// Leaf: `start..start+count` into `order`. Inner: `start` is the right child.
    start: usize,
    count: usize,
}

/// Bounding-volume hierarchy over a mesh's triangles for ray casting.
#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
    tris: Vec<[Point3<f64>; 3]>,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let tris: Vec<[Point3<f64>; 3]> =
            (0..mesh.triangle_count()).map(|t| mesh.triangle_positions(t)).collect();
        let centroids: Vec<Point3<f64>> = tris
            .iter()
            .map(|[a, b, c]| Point3::from((a.coords + b.coords + c.coords) / 3.0))
            .collect();
        let mut bvh = Bvh {
            nodes: Vec::new(),
            order: (0..tris.len() as u32).collect(),
            tris,
        };
        if !bvh.tris.is_empty() {
            let n = bvh.order.len();
            bvh.split(0, n, &centroids);
        }
        bvh
    }

    fn bounds(&self, start: usize, end: usize) -> (Point3<f64>, Point3<f64>) {
        let mut lo = Point3::from(Vector3::repeat(f64::INFINITY));
        let mut hi = Point3::from(Vector3::repeat(f64::NEG_INFINITY));
        for &t in &self.order[start..end] {
            for p in &self.tris[t as usize] {
                lo = lo.inf(p);
                hi = hi.sup(p);
            }
        }
        (lo, hi)
    }

    fn split(&mut self, start: usize, end: usize, centroids: &[Point3<f64>]) -> usize {
        let (lo, hi) = self.bounds(start, end);
        let id = self.nodes.len();
        self.nodes.push(Node { lo, hi, start, count: end - start });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let ext = hi - lo;
        let axis = ext.imax();
        let mid = start + (end - start) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a as usize][axis].total_cmp(&centroids[b as usize][axis])
        });
        self.split(start, mid, centroids);
        let right = self.split(mid, end, centroids);
        self.nodes[id].start = right;
        self.nodes[id].count = 0;
        id
    }

    /// Closest hit with `t` in `(t_min, t_max)`.
    pub fn intersect(
        &self,
        origin: &Point3<f64>,
        dir: &Vector3<f64>,
        t_min: f64,
        t_max: f64,
    ) -> Option<RayHit> {
        let mut best: Option<RayHit> = None;
        let mut limit = t_max;
        self.traverse(origin, dir, t_min, &mut limit, &mut |hit| {
            best = Some(hit);
            false
        });
        best
    }

    /// Whether anything blocks the open segment `(t_min, t_max)`.
    pub fn occluded(&self, origin: &Point3<f64>, dir: &Vector3<f64>, t_min: f64, t_max: f64) -> bool {
        let mut hit = false;
        let mut limit = t_max;
        self.traverse(origin, dir, t_min, &mut limit, &mut |_| {
            hit = true;
            true
        });
        hit
    }

    /// Visits hits nearer than `limit`, shrinking it; `on_hit` returns true to stop.
    fn traverse(
        &self,
        origin: &Point3<f64>,
        dir: &Vector3<f64>,
        t_min: f64,
        limit: &mut f64,
        on_hit: &mut dyn FnMut(RayHit) -> bool,
    ) {
        if self.nodes.is_empty() {
            return;
        }
        let inv = dir.map(|d| 1.0 / d);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if !slab_test(&node.lo, &node.hi, origin, &inv, t_min, *limit) {
                continue;
            }
            if node.count == 0 {
                stack.push(node.start);
                stack.push(id + 1);
                continue;
            }
            for &t in &self.order[node.start..node.start + node.count] {
                if let Some((d, b)) = ray_triangle(origin, dir, &self.tris[t as usize]) {
                    if d > t_min && d < *limit {
                        *limit = d;
                        if on_hit(RayHit { t: d, tri: t, bary: b }) {
                            return;
                        }
                    }
                }
            }
        }
    }
}

fn slab_test(
    lo: &Point3<f64>,
    hi: &Point3<f64>,
    o: &Point3<f64>,
    inv: &Vector3<f64>,
    t_min: f64,
    t_max: f64,
) -> bool {
    let mut t0 = t_min;
    let mut t1 = t_max;
    for a in 0..3 {
        let mut near = (lo[a] - o[a]) * inv[a];
        let mut far = (hi[a] - o[a]) * inv[a];
        if near > far {
            std::mem::swap(&mut near, &mut far);
        }
        // NaN from 0·∞ means the ray lies in the slab plane: keep it.
        if near > t0 {
            t0 = near;
        }
        if far < t1 {
            t1 = far;
        }
    }
    t0 <= t1 * (1.0 + 4.0 * f64::EPSILON)
}

/// Möller–Trumbore; returns `(t, barycentrics)` for a hit in front of or behind the origin.
pub(crate) fn ray_triangle(
    o: &Point3<f64>,
    d: &Vector3<f64>,
    [a, b, c]: &[Point3<f64>; 3],
) -> Option<(f64, [f64; 3])> {
    let e1 = b - a;
    let e2 = c - a;
    let p = d.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = o - a;
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = d.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some((e2.dot(&q) * inv, [1.0 - u - v, u, v]))
}
