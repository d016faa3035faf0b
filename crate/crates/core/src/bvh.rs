//! Bounding volume hierarchy over a [`TriangleMesh`] for nearest-hit and
//! occlusion ray queries.
//!
//! Nearest-hit ties are broken by the lower triangle index so the hierarchy
//! and a linear scan agree exactly.

use crate::mesh::TriangleMesh;
use crate::vec3::Vec3;

/// Hits closer than this along the ray are ignored (self-intersection guard).
pub const T_MIN: f64 = 1e-9;

const LEAF_SIZE: usize = 4;
const BINS: usize = 12;
/// Below this depth SAH splits are allowed; deeper nodes split at the median
/// so the fixed traversal stack cannot overflow.
const SAH_MAX_DEPTH: usize = 40;

#[derive(Clone, Copy, Debug)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit direction.
    pub dir: Vec3,
    inv_dir: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3) -> Self {
        Ray { origin, dir, inv_dir: Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z) }
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub triangle: u32,
    pub t: f64,
}

impl Hit {
    #[inline]
    fn closer_than(&self, other: &Hit) -> bool {
        self.t < other.t || (self.t == other.t && self.triangle < other.triangle)
    }
}

/// Two-sided Möller–Trumbore test; returns the ray parameter of the hit.
#[inline]
pub fn intersect_triangle(ray: &Ray, a: Vec3, b: Vec3, c: Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = ray.dir.cross(e2);
    let det = e1.dot(p);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - a;
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = ray.dir.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t > T_MIN).then_some(t)
}

/// Linear scan over every triangle. Reference oracle for [`Bvh::nearest`].
pub fn brute_force_nearest(mesh: &TriangleMesh, ray: &Ray) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for t in 0..mesh.len() {
        let [a, b, c] = mesh.corners(t);
        if let Some(d) = intersect_triangle(ray, a, b, c) {
            let hit = Hit { triangle: t as u32, t: d };
            if best.is_none_or(|b| hit.closer_than(&b)) {
                best = Some(hit);
            }
        }
    }
    best
}

#[derive(Clone, Copy, Debug)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    const EMPTY: Aabb = Aabb {
        lo: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        hi: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    fn grow(&mut self, p: Vec3) {
        self.lo = self.lo.min(p);
        self.hi = self.hi.max(p);
    }

    fn merge(&mut self, o: &Aabb) {
        self.lo = self.lo.min(o.lo);
        self.hi = self.hi.max(o.hi);
    }

    fn half_area(&self) -> f64 {
        let d = self.hi - self.lo;
        if d.x < 0.0 {
            return 0.0;
        }
        d.x * d.y + d.y * d.z + d.z * d.x
    }

    /// Slab test; returns the entry distance when the box is hit before `t_max`.
    #[inline]
    fn entry(&self, ray: &Ray, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for axis in 0..3 {
            let inv = ray.inv_dir[axis];
            let mut a = (self.lo[axis] - ray.origin[axis]) * inv;
            let mut b = (self.hi[axis] - ray.origin[axis]) * inv;
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            // NaN (origin on a slab face with a zero direction component)
            // falls through min/max and leaves the interval unchanged.
            t0 = t0.max(a);
            t1 = t1.min(b);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf: first entry in `order`. Interior nodes keep the left child
    /// immediately after themselves and the right child at `right`.
    start: u32,
    count: u32,
    right: u32,
}

/// Read-only acceleration structure; share it freely between threads.
#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    /// Triangle indices in leaf order.
    order: Vec<u32>,
    corners: Vec<[Vec3; 3]>,
}

struct BuildItem {
    bounds: Aabb,
    centroid: Vec3,
    index: u32,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Bvh {
        let corners: Vec<[Vec3; 3]> = (0..mesh.len()).map(|t| mesh.corners(t)).collect();
        let mut items: Vec<BuildItem> = corners
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut bounds = Aabb::EMPTY;
                c.iter().for_each(|&p| bounds.grow(p));
                // Pad so rays grazing an axis-aligned face still enter the box.
                let pad = 1e-9 * (1.0 + (bounds.hi - bounds.lo).norm());
                bounds.lo = bounds.lo - Vec3::new(pad, pad, pad);
                bounds.hi += Vec3::new(pad, pad, pad);
                BuildItem { bounds, centroid: (c[0] + c[1] + c[2]) / 3.0, index: i as u32 }
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * items.len() / LEAF_SIZE + 1);
        let n = items.len();
        build_recursive(&mut items, 0, n, 0, &mut nodes);
        let order = items.iter().map(|it| it.index).collect();
        Bvh { nodes, order, corners }
    }

    pub fn triangle_count(&self) -> usize {
        self.corners.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Closest intersection along the ray, if any.
    pub fn nearest(&self, ray: &Ray) -> Option<Hit> {
        let mut best = Hit { triangle: u32::MAX, t: f64::INFINITY };
        let mut stack = [0u32; 128];
        let mut sp = 1usize;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp] as usize];
            match node.bounds.entry(ray, best.t) {
                Some(_) => {}
                None => continue,
            }
            if node.count > 0 {
                let start = node.start as usize;
                for &tri in &self.order[start..start + node.count as usize] {
                    let [a, b, c] = self.corners[tri as usize];
                    if let Some(t) = intersect_triangle(ray, a, b, c) {
                        let hit = Hit { triangle: tri, t };
                        if hit.closer_than(&best) {
                            best = hit;
                        }
                    }
                }
            } else {
                let left = stack[sp] + 1;
                let right = node.right;
                // Visit the nearer child first.
                let dl = self.nodes[left as usize].bounds.entry(ray, best.t);
                let dr = self.nodes[right as usize].bounds.entry(ray, best.t);
                match (dl, dr) {
                    (Some(a), Some(b)) => {
                        let (first, second) = if a <= b { (left, right) } else { (right, left) };
                        stack[sp] = second;
                        stack[sp + 1] = first;
                        sp += 2;
                    }
                    (Some(_), None) => {
                        stack[sp] = left;
                        sp += 1;
                    }
                    (None, Some(_)) => {
                        stack[sp] = right;
                        sp += 1;
                    }
                    (None, None) => {}
                }
            }
        }
        (best.triangle != u32::MAX).then_some(best)
    }

    /// True when any triangle intersects the ray strictly before `t_max`.
    pub fn occluded(&self, ray: &Ray, t_max: f64) -> bool {
        let mut stack = [0u32; 128];
        let mut sp = 1usize;
        while sp > 0 {
            sp -= 1;
            let idx = stack[sp];
            let node = &self.nodes[idx as usize];
            if node.bounds.entry(ray, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                let start = node.start as usize;
                for &tri in &self.order[start..start + node.count as usize] {
                    let [a, b, c] = self.corners[tri as usize];
                    if intersect_triangle(ray, a, b, c).is_some_and(|t| t < t_max) {
                        return true;
                    }
                }
            } else {
                stack[sp] = idx + 1;
                stack[sp + 1] = node.right;
                sp += 2;
            }
        }
        false
    }
}

fn build_recursive(items: &mut [BuildItem], start: usize, end: usize, depth: usize, nodes: &mut Vec<Node>) -> u32 {
    let slice = &mut items[start..end];
    let mut bounds = Aabb::EMPTY;
    let mut cbounds = Aabb::EMPTY;
    for it in slice.iter() {
        bounds.merge(&it.bounds);
        cbounds.grow(it.centroid);
    }
    let me = nodes.len() as u32;
    nodes.push(Node { bounds, start: start as u32, count: (end - start) as u32, right: 0 });
    if slice.len() <= LEAF_SIZE {
        return me;
    }

    let extent = cbounds.hi - cbounds.lo;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    if extent[axis] <= 0.0 || depth >= SAH_MAX_DEPTH {
        split_and_recurse(items, start, end, (start + end) / 2, axis, depth, nodes, me);
        return me;
    }

    // Binned surface-area heuristic along the widest centroid axis.
    let lo = cbounds.lo[axis];
    let scale = BINS as f64 / extent[axis];
    let bin_of = |c: f64| (((c - lo) * scale) as usize).min(BINS - 1);
    let mut bin_bounds = [Aabb::EMPTY; BINS];
    let mut bin_count = [0usize; BINS];
    for it in slice.iter() {
        let b = bin_of(it.centroid[axis]);
        bin_bounds[b].merge(&it.bounds);
        bin_count[b] += 1;
    }
    let mut best_cost = f64::INFINITY;
    let mut best_split = 0;
    for split in 1..BINS {
        let (mut lb, mut rb) = (Aabb::EMPTY, Aabb::EMPTY);
        let (mut lc, mut rc) = (0, 0);
        for b in 0..split {
            lb.merge(&bin_bounds[b]);
            lc += bin_count[b];
        }
        for b in split..BINS {
            rb.merge(&bin_bounds[b]);
            rc += bin_count[b];
        }
        if lc == 0 || rc == 0 {
            continue;
        }
        let cost = lb.half_area() * lc as f64 + rb.half_area() * rc as f64;
        if cost < best_cost {
            best_cost = cost;
            best_split = split;
        }
    }

    let mid = if best_split == 0 {
        (start + end) / 2
    } else {
        let left = slice.iter().filter(|it| bin_of(it.centroid[axis]) < best_split).count();
        start + left
    };
    split_and_recurse(items, start, end, mid, axis, depth, nodes, me);
    me
}

#[allow(clippy::too_many_arguments)]
fn split_and_recurse(
    items: &mut [BuildItem],
    start: usize,
    end: usize,
    mid: usize,
    axis: usize,
    depth: usize,
    nodes: &mut Vec<Node>,
    me: u32,
) {
    items[start..end].sort_by(|a, b| a.centroid[axis].total_cmp(&b.centroid[axis]).then(a.index.cmp(&b.index)));
    let left = build_recursive(items, start, mid, depth + 1, nodes);
    debug_assert_eq!(left, me + 1);
    let right = build_recursive(items, mid, end, depth + 1, nodes);
    let node = &mut nodes[me as usize];
    node.count = 0;
    node.right = right;
}
