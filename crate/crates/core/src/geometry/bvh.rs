use crate::math::Vec3;

use super::{Aabb, MeshError, TriangleMesh};

const LEAF_SIZE: usize = 4;
/// Slack on barycentric bounds so rays through shared edges cannot slip
/// between neighbouring triangles.
const EDGE_EPS: f64 = 1e-10;
const T_MIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit length; hit distances are in the same units as positions.
    pub direction: Vec3,
    inv_direction: Vec3,
}

impl Ray {
    /// Panics in debug builds if `direction` is zero.
    pub fn new(origin: Vec3, direction: Vec3) -> Ray {
        debug_assert!(direction.length_squared() > 0.0, "zero ray direction");
        let d = direction.normalized();
        Ray {
            origin,
            direction: d,
            inv_direction: Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z),
        }
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub distance: f64,
    /// Index into the flattened triangle list (mesh order, then triangle order).
    pub triangle: usize,
    /// Index of the mesh in the list passed to [`Bvh::build`].
    pub instance: usize,
    /// Triangle index within its mesh.
    pub local_triangle: usize,
    /// Weights of the second and third vertex; the first gets `1 - u - v`.
    pub barycentric: [f64; 2],
}

#[derive(Debug, Clone, Copy)]
struct PackedTriangle {
    v0: Vec3,
    e1: Vec3,
    e2: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BvhNode {
    Leaf { bounds: Aabb, start: u32, count: u32 },
    /// The left child always directly follows its parent.
    Interior { bounds: Aabb, right: u32, axis: u8 },
}

impl BvhNode {
    pub fn bounds(&self) -> &Aabb {
        match self {
            BvhNode::Leaf { bounds, .. } | BvhNode::Interior { bounds, .. } => bounds,
        }
    }
}

/// Traversal copy of a node: f32 bounds rounded outward, 32 bytes.
#[derive(Debug, Clone, Copy)]
struct FlatNode {
    min: [f32; 3],
    max: [f32; 3],
    /// Leaf: first slot in `order`. Interior: right child.
    index: u32,
    /// Leaf: triangle count. Interior: 0.
    count: u32,
}

impl FlatNode {
    fn new(node: &BvhNode) -> FlatNode {
        let b = node.bounds();
        let down = |x: f64| {
            let f = x as f32;
            if f as f64 > x {
                f.next_down()
            } else {
                f
            }
        };
        let up = |x: f64| {
            let f = x as f32;
            if (f as f64) < x {
                f.next_up()
            } else {
                f
            }
        };
        let (index, count) = match *node {
            BvhNode::Leaf { start, count, .. } => (start, count),
            BvhNode::Interior { right, .. } => (right, 0),
        };
        FlatNode {
            min: [down(b.min.x), down(b.min.y), down(b.min.z)],
            max: [up(b.max.x), up(b.max.y), up(b.max.z)],
            index,
            count,
        }
    }
}

/// Ray data laid out for box tests.
struct RayBoxes {
    origin: [f64; 3],
    inv: [f64; 3],
}

impl RayBoxes {
    fn new(ray: &Ray) -> RayBoxes {
        RayBoxes {
            origin: ray.origin.to_array(),
            inv: ray.inv_direction.to_array(),
        }
    }

    /// Entry distance when the box is hit before `t_max`. A NaN from
    /// `0 * inf` (origin on a slab plane) fails both comparisons and is ignored.
    #[inline]
    fn enter(&self, n: &FlatNode, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for a in 0..3 {
            let mut near = (n.min[a] as f64 - self.origin[a]) * self.inv[a];
            let mut far = (n.max[a] as f64 - self.origin[a]) * self.inv[a];
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            if near > t0 {
                t0 = near;
            }
            if far < t1 {
                t1 = far;
            }
        }
        (t0 <= t1 * (1.0 + 4.0 * f64::EPSILON)).then_some(t0)
    }
}

/// Bounding volume hierarchy over a set of meshes, split by binned SAH.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    flat: Vec<FlatNode>,
    /// Global triangle ids, grouped by leaf.
    order: Vec<u32>,
    /// Triangles by global id.
    triangles: Vec<PackedTriangle>,
    /// The same triangles in `order`, so leaves read contiguous memory.
    leaf_packed: Vec<PackedTriangle>,
    /// `(instance, local triangle)` per global id.
    refs: Vec<(u32, u32)>,
}

/// Möller–Trumbore. Returns `(t, u, v)` for hits with `t > T_MIN`.
#[inline]
pub fn intersect_triangle(ray: &Ray, v0: Vec3, v1: Vec3, v2: Vec3) -> Option<(f64, f64, f64)> {
    intersect_packed(
        ray,
        &PackedTriangle {
            v0,
            e1: v1 - v0,
            e2: v2 - v0,
        },
    )
}

#[inline]
fn intersect_packed(ray: &Ray, tri: &PackedTriangle) -> Option<(f64, f64, f64)> {
    let p = ray.direction.cross(tri.e2);
    let det = tri.e1.dot(p);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - tri.v0;
    let u = s.dot(p) * inv;
    if !(-EDGE_EPS..=1.0 + EDGE_EPS).contains(&u) {
        return None;
    }
    let q = s.cross(tri.e1);
    let v = ray.direction.dot(q) * inv;
    if v < -EDGE_EPS || u + v > 1.0 + EDGE_EPS {
        return None;
    }
    let t = tri.e2.dot(q) * inv;
    (t > T_MIN).then_some((t, u, v))
}

impl Bvh {
    /// Builds over every triangle of `meshes`. Deterministic for a given input order.
    pub fn build<M: AsRef<TriangleMesh>>(meshes: &[M]) -> Result<Bvh, MeshError> {
        let mut triangles = Vec::new();
        let mut refs = Vec::new();
        let mut tri_bounds = Vec::new();
        for (inst, mesh) in meshes.iter().enumerate() {
            let mesh = mesh.as_ref();
            for t in 0..mesh.triangles().len() {
                let [a, b, c] = mesh.triangle_vertices(t);
                triangles.push(PackedTriangle {
                    v0: a,
                    e1: b - a,
                    e2: c - a,
                });
                refs.push((inst as u32, t as u32));
                tri_bounds.push(Aabb::from_points([a, b, c]));
            }
        }
        if triangles.is_empty() {
            return Err(MeshError::EmptyScene);
        }
        let centroids: Vec<Vec3> = tri_bounds.iter().map(Aabb::center).collect();
        let mut order: Vec<u32> = (0..triangles.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        build_recursive(&mut nodes, &mut order, 0, &tri_bounds, &centroids, 0);
        let leaf_packed = order.iter().map(|&i| triangles[i as usize]).collect();
        let flat = nodes.iter().map(FlatNode::new).collect();
        Ok(Bvh {
            nodes,
            flat,
            order,
            triangles,
            leaf_packed,
            refs,
        })
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    pub fn bounds(&self) -> Aabb {
        *self.nodes[0].bounds()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Global triangle ids stored in a leaf.
    pub fn leaf_triangles(&self, start: u32, count: u32) -> &[u32] {
        &self.order[start as usize..(start + count) as usize]
    }

    /// World-space corners of a global triangle id.
    pub fn triangle(&self, id: usize) -> [Vec3; 3] {
        let t = &self.triangles[id];
        [t.v0, t.v0 + t.e1, t.v0 + t.e2]
    }

    pub fn triangle_ref(&self, id: usize) -> (usize, usize) {
        let (i, t) = self.refs[id];
        (i as usize, t as usize)
    }

    /// Nearest hit with positive distance. Equal distances resolve to the
    /// lower triangle id, so the result never depends on traversal order.
    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        self.intersect_within(ray, f64::INFINITY)
    }

    pub fn intersect_within(&self, ray: &Ray, t_max: f64) -> Option<Hit> {
        let rb = RayBoxes::new(ray);
        let negative = [ray.direction.x < 0.0, ray.direction.y < 0.0, ray.direction.z < 0.0];
        let mut best: Option<(f64, u32, f64, f64)> = None;
        let mut limit = t_max;
        // Pending nodes with the distance at which the ray enters them.
        let mut stack = [(0u32, 0.0f64); 64];
        let mut sp = 0usize;
        rb.enter(&self.flat[0], limit)?;
        let mut node = 0u32;
        loop {
            let n = &self.flat[node as usize];
            if n.count > 0 {
                let (s, e) = (n.index as usize, (n.index + n.count) as usize);
                for (k, tri) in self.leaf_packed[s..e].iter().enumerate() {
                    if let Some((t, u, v)) = intersect_packed(ray, tri) {
                        let id = self.order[s + k];
                        let better = match best {
                            None => t <= limit,
                            Some((bt, bid, ..)) => t < bt || (t == bt && id < bid),
                        };
                        if better {
                            best = Some((t, id, u, v));
                            limit = t;
                        }
                    }
                }
            } else {
                let BvhNode::Interior { axis, .. } = self.nodes[node as usize] else { unreachable!() };
                let (first, second) = if negative[axis as usize] {
                    (n.index, node + 1)
                } else {
                    (node + 1, n.index)
                };
                let hit_first = rb.enter(&self.flat[first as usize], limit);
                let hit_second = rb.enter(&self.flat[second as usize], limit);
                match (hit_first, hit_second) {
                    (Some(_), Some(t2)) => {
                        stack[sp] = (second, t2);
                        sp += 1;
                        node = first;
                        continue;
                    }
                    (Some(_), None) => {
                        node = first;
                        continue;
                    }
                    (None, Some(_)) => {
                        node = second;
                        continue;
                    }
                    (None, None) => {}
                }
            }
            // Pop until a node the ray enters before the current best hit.
            loop {
                if sp == 0 {
                    return best.map(|(t, id, u, v)| self.make_hit(t, id, u, v));
                }
                sp -= 1;
                let (candidate, entry) = stack[sp];
                if entry <= limit * (1.0 + 4.0 * f64::EPSILON) {
                    node = candidate;
                    break;
                }
            }
        }
    }

    /// True if anything is hit strictly closer than `t_max`.
    pub fn occluded(&self, ray: &Ray, t_max: f64) -> bool {
        let rb = RayBoxes::new(ray);
        if rb.enter(&self.flat[0], t_max).is_none() {
            return false;
        }
        let mut stack = [0u32; 64];
        let mut sp = 1usize;
        while sp > 0 {
            sp -= 1;
            let node = stack[sp];
            let n = &self.flat[node as usize];
            if n.count > 0 {
                let (s, e) = (n.index as usize, (n.index + n.count) as usize);
                for tri in &self.leaf_packed[s..e] {
                    if let Some((t, ..)) = intersect_packed(ray, tri) {
                        if t < t_max {
                            return true;
                        }
                    }
                }
            } else {
                for child in [n.index, node + 1] {
                    if rb.enter(&self.flat[child as usize], t_max).is_some() {
                        stack[sp] = child;
                        sp += 1;
                    }
                }
            }
        }
        false
    }

    fn make_hit(&self, t: f64, id: u32, u: f64, v: f64) -> Hit {
        let (instance, local) = self.refs[id as usize];
        Hit {
            distance: t,
            triangle: id as usize,
            instance: instance as usize,
            local_triangle: local as usize,
            barycentric: [u, v],
        }
    }
}

const SAH_BINS: usize = 16;
const MAX_SAH_DEPTH: usize = 40;
/// Cost of one node visit relative to one triangle test.
const TRAVERSAL_COST: f64 = 1.0;

fn surface_area(b: &Aabb) -> f64 {
    let d = b.max - b.min;
    if d.x < 0.0 {
        return 0.0;
    }
    2.0 * (d.x * d.y + d.y * d.z + d.z * d.x)
}

/// Binned surface-area-heuristic split: `(axis, bin boundary)` of the cheapest
/// split, or `None` when keeping a leaf is no worse or centroids coincide.
fn sah_split(order: &[u32], bounds: &Aabb, centroid_bounds: &Aabb, tri_bounds: &[Aabb], centroids: &[Vec3]) -> Option<(usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for axis in 0..3 {
        let (lo, hi) = (centroid_bounds.min[axis], centroid_bounds.max[axis]);
        if hi - lo <= 0.0 {
            continue;
        }
        let mut counts = [0usize; SAH_BINS];
        let mut boxes = [Aabb::EMPTY; SAH_BINS];
        for &i in order {
            let b = bin_of(centroids[i as usize][axis], lo, hi);
            counts[b] += 1;
            boxes[b] = boxes[b].union(tri_bounds[i as usize]);
        }
        let mut right_area = [0.0; SAH_BINS];
        let mut right_count = [0usize; SAH_BINS];
        let (mut acc, mut n) = (Aabb::EMPTY, 0);
        for k in (1..SAH_BINS).rev() {
            acc = acc.union(boxes[k]);
            n += counts[k];
            right_area[k] = surface_area(&acc);
            right_count[k] = n;
        }
        let (mut acc, mut n) = (Aabb::EMPTY, 0);
        for k in 1..SAH_BINS {
            acc = acc.union(boxes[k - 1]);
            n += counts[k - 1];
            if n == 0 || right_count[k] == 0 {
                continue;
            }
            let cost = surface_area(&acc) * n as f64 + right_area[k] * right_count[k] as f64;
            if best.is_none_or(|b| cost < b.0) {
                best = Some((cost, axis, k));
            }
        }
    }
    let (cost, axis, k) = best?;
    let leaf_cost = surface_area(bounds) * order.len() as f64;
    let split_cost = TRAVERSAL_COST * surface_area(bounds) + cost;
    (order.len() > 2 * LEAF_SIZE || split_cost < leaf_cost).then_some((axis, k))
}

#[inline]
fn bin_of(c: f64, lo: f64, hi: f64) -> usize {
    (((c - lo) / (hi - lo) * SAH_BINS as f64) as usize).min(SAH_BINS - 1)
}

fn build_recursive(
    nodes: &mut Vec<BvhNode>,
    order: &mut [u32],
    offset: usize,
    tri_bounds: &[Aabb],
    centroids: &[Vec3],
    depth: usize,
) -> u32 {
    let bounds = order
        .iter()
        .fold(Aabb::EMPTY, |b, &i| b.union(tri_bounds[i as usize]));
    let index = nodes.len() as u32;
    let leaf = |nodes: &mut Vec<BvhNode>| {
        nodes.push(BvhNode::Leaf {
            bounds,
            start: offset as u32,
            count: order.len() as u32,
        });
        index
    };
    if order.len() <= LEAF_SIZE {
        return leaf(nodes);
    }
    let centroid_bounds = Aabb::from_points(order.iter().map(|&i| centroids[i as usize]));
    // Median splits past this depth keep the tree within the traversal stack.
    let sah = if depth < MAX_SAH_DEPTH {
        sah_split(order, &bounds, &centroid_bounds, tri_bounds, centroids)
    } else {
        None
    };
    let (axis, mid) = match sah {
        Some((axis, k)) => {
            let (lo, hi) = (centroid_bounds.min[axis], centroid_bounds.max[axis]);
            // Stable partition keeps the build independent of anything but input order.
            let (l, r): (Vec<u32>, Vec<u32>) =
                order.iter().partition(|&&i| bin_of(centroids[i as usize][axis], lo, hi) < k);
            let mid = l.len();
            order[..mid].copy_from_slice(&l);
            order[mid..].copy_from_slice(&r);
            (axis, mid)
        }
        None if depth < MAX_SAH_DEPTH && order.len() <= 4 * LEAF_SIZE => return leaf(nodes),
        None => {
            // Coincident centroids or a deep tree: id-ordered median split.
            let axis = centroid_bounds.longest_axis();
            order.sort_by(|&a, &b| {
                centroids[a as usize][axis]
                    .total_cmp(&centroids[b as usize][axis])
                    .then(a.cmp(&b))
            });
            (axis, order.len() / 2)
        }
    };
    nodes.push(BvhNode::Interior {
        bounds,
        right: 0,
        axis: axis as u8,
    });
    let (left, right) = order.split_at_mut(mid);
    build_recursive(nodes, left, offset, tri_bounds, centroids, depth + 1);
    let right_index = build_recursive(nodes, right, offset + mid, tri_bounds, centroids, depth + 1);
    if let BvhNode::Interior { right, .. } = &mut nodes[index as usize] {
        *right = right_index;
    }
    index
}

impl AsRef<TriangleMesh> for TriangleMesh {
    fn as_ref(&self) -> &TriangleMesh {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::{centered_cube, unit_cube};
    use crate::geometry::{mesh_aabb, translate_mesh};

    #[test]
    fn single_triangle_is_one_leaf() {
        let m = TriangleMesh::new(vec![Vec3::ZERO, Vec3::X, Vec3::Y], vec![[0, 1, 2]], None).unwrap();
        let bvh = Bvh::build(&[m]).unwrap();
        assert_eq!(bvh.nodes().len(), 1);
        assert!(matches!(bvh.nodes()[0], BvhNode::Leaf { count: 1, .. }));
    }

    #[test]
    fn root_bounds_union_of_two_cubes() {
        let a = unit_cube();
        let b = translate_mesh(&unit_cube(), Vec3::new(5.0, 0.0, 0.0));
        let expected = mesh_aabb(&a).unwrap().union(mesh_aabb(&b).unwrap());
        let bvh = Bvh::build(&[a, b]).unwrap();
        assert_eq!(bvh.bounds(), expected);
    }

    #[test]
    fn empty_scene_errors() {
        let none: Vec<TriangleMesh> = Vec::new();
        assert!(matches!(Bvh::build(&none), Err(MeshError::EmptyScene)));
    }

    #[test]
    fn ray_hits_centered_cube_at_four_and_a_half() {
        let bvh = Bvh::build(&[centered_cube()]).unwrap();
        let hit = bvh
            .intersect(&Ray::new(Vec3::new(0.0, 0.0, -5.0), Vec3::Z))
            .expect("hit");
        assert!((hit.distance - 4.5).abs() < 1e-12);
        assert_eq!(hit.instance, 0);
    }

    #[test]
    fn ray_pointing_away_misses() {
        let bvh = Bvh::build(&[centered_cube()]).unwrap();
        assert!(bvh.intersect(&Ray::new(Vec3::new(0.0, 0.0, -5.0), -Vec3::Z)).is_none());
        assert!(!bvh.occluded(&Ray::new(Vec3::new(0.0, 0.0, -5.0), -Vec3::Z), 100.0));
    }

    #[test]
    fn occlusion_respects_max_distance() {
        let bvh = Bvh::build(&[centered_cube()]).unwrap();
        let r = Ray::new(Vec3::new(0.0, 0.0, -5.0), Vec3::Z);
        assert!(bvh.occluded(&r, 5.0));
        assert!(!bvh.occluded(&r, 4.0));
    }

    #[test]
    fn leaves_contain_their_triangles() {
        let meshes: Vec<_> = (0..20)
            .map(|i| translate_mesh(&unit_cube(), Vec3::new(i as f64 * 1.5, (i % 3) as f64, 0.0)))
            .collect();
        let bvh = Bvh::build(&meshes).unwrap();
        let mut seen = vec![false; bvh.triangle_count()];
        for node in bvh.nodes() {
            if let BvhNode::Leaf { bounds, start, count } = node {
                for &id in bvh.leaf_triangles(*start, *count) {
                    seen[id as usize] = true;
                    for p in bvh.triangle(id as usize) {
                        assert!(bounds.contains(p));
                    }
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    fn brute(meshes: &[TriangleMesh], ray: &Ray) -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for (m, mesh) in meshes.iter().enumerate() {
            for t in 0..mesh.triangles().len() {
                let [a, b, c] = mesh.triangle_vertices(t);
                if let Some((d, ..)) = intersect_triangle(ray, a, b, c) {
                    if best.is_none_or(|x| d < x.0) {
                        best = Some((d, m, t));
                    }
                }
            }
        }
        best
    }

    fn soup(seed: u64, n: usize) -> Vec<TriangleMesh> {
        let mut rng = crate::rng::Pcg32::new(seed, 7);
        let mut u = move |lo: f64, hi: f64| lo + (hi - lo) * rng.next_f64();
        let mut meshes = vec![crate::geometry::primitives::quad_xy(-20.0, 20.0, -20.0, 20.0, 0.0)];
        for _ in 0..n {
            let s = u(0.05, 1.0);
            let c = Vec3::new(u(-5.0, 5.0), u(-5.0, 5.0), u(0.0, 3.0));
            let v: Vec<Vec3> = (0..3).map(|_| c + Vec3::new(u(-s, s), u(-s, s), u(-s, s))).collect();
            if let Ok(m) = TriangleMesh::new(v, vec![[0, 1, 2]], None) {
                meshes.push(m);
            }
        }
        meshes
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn prop_matches_brute_force(seed in 0u64..10_000, n in 1usize..300, ox in -8.0f64..8.0, oy in -8.0f64..8.0, dx in -1.0f64..1.0, dy in -1.0f64..1.0) {
            let meshes = soup(seed, n);
            let bvh = Bvh::build(&meshes).unwrap();
            let ray = Ray::new(Vec3::new(ox, oy, 6.0), Vec3::new(dx, dy, -1.0));
            let got = bvh.intersect(&ray).map(|h| (h.distance, h.instance, h.local_triangle));
            let want = brute(&meshes, &ray);
            proptest::prop_assert_eq!(got.map(|g| g.0), want.map(|w| w.0));
            if let Some((d, ..)) = want {
                proptest::prop_assert!(bvh.occluded(&ray, d * 1.000001));
                proptest::prop_assert!(!bvh.occluded(&ray, d * 0.999999));
            }
        }
    }

    #[test]
    fn coincident_triangles_still_split() {
        let tri = || TriangleMesh::new(vec![Vec3::ZERO, Vec3::X, Vec3::Y], vec![[0, 1, 2]], None).unwrap();
        let meshes: Vec<_> = (0..500).map(|_| tri()).collect();
        let bvh = Bvh::build(&meshes).unwrap();
        let hit = bvh.intersect(&Ray::new(Vec3::new(0.2, 0.2, 1.0), -Vec3::Z)).unwrap();
        assert_eq!(hit.instance, 0);
        assert!(bvh.nodes().iter().all(|n| !matches!(n, BvhNode::Leaf { count, .. } if *count as usize > 4 * LEAF_SIZE)));
    }

    #[test]
    fn geometric_chain_stays_shallow_enough() {
        // Sizes halving along x push SAH toward one-sided splits.
        let meshes: Vec<_> = (0..3000)
            .map(|i| {
                let x = 1.0 - 0.5f64.powi(i / 50) + 1e-6 * i as f64;
                translate_mesh(&unit_cube(), Vec3::new(x * 100.0, 0.0, 0.0))
            })
            .collect();
        let bvh = Bvh::build(&meshes).unwrap();
        let r = Ray::new(Vec3::new(-10.0, 0.5, 0.5), Vec3::X);
        assert!((bvh.intersect(&r).unwrap().distance - 10.0).abs() < 1e-9);
    }
}
