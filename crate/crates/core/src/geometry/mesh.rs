use serde::{Deserialize, Serialize};

use crate::math::{wrap_angle, Mat3, Vec3};

use super::MeshError;

/// Triangles with area at or below this (m²) are dropped at construction.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    normals: Vec<Vec3>,
    dropped_degenerate: usize,
}

impl TriangleMesh {
    /// Builds a mesh, dropping degenerate triangles and deriving
    /// area-weighted vertex normals when `normals` is `None`.
    pub fn new(
        vertices: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
        normals: Option<Vec<Vec3>>,
    ) -> Result<TriangleMesh, MeshError> {
        let n = vertices.len();
        if let Some(bad) = triangles.iter().flatten().find(|&&i| i as usize >= n) {
            return Err(MeshError::Malformed(format!(
                "triangle index {bad} out of range for {n} vertices"
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(MeshError::Malformed("non-finite vertex coordinate".into()));
        }
        let before = triangles.len();
        let triangles: Vec<[u32; 3]> = triangles
            .into_iter()
            .filter(|t| triangle_area(&vertices, t) > DEGENERATE_AREA)
            .collect();
        let dropped_degenerate = before - triangles.len();
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        if dropped_degenerate > 0 {
            log::warn!("dropped {dropped_degenerate} degenerate triangles");
        }
        let normals = match normals {
            Some(ns) if ns.len() == n => {
                let computed = area_weighted_normals(&vertices, &triangles);
                ns.into_iter()
                    .zip(computed)
                    .map(|(given, fallback)| {
                        let u = given.normalized();
                        if (u.length() - 1.0).abs() < 1e-9 {
                            u
                        } else {
                            fallback
                        }
                    })
                    .collect()
            }
            _ => area_weighted_normals(&vertices, &triangles),
        };
        Ok(TriangleMesh {
            vertices,
            triangles,
            normals,
            dropped_degenerate,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    /// Degenerate triangles removed when the mesh was built.
    pub fn dropped_degenerate(&self) -> usize {
        self.dropped_degenerate
    }

    pub fn triangle_vertices(&self, tri: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[tri];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Unit geometric normal following the winding order.
    pub fn face_normal(&self, tri: usize) -> Vec3 {
        let [a, b, c] = self.triangle_vertices(tri);
        (b - a).cross(c - a).normalized()
    }

    /// Merges vertices closer than `tolerance` (per axis), keeping first-seen order.
    /// Normals are re-derived from the welded topology.
    pub fn welded(&self, tolerance: f64) -> TriangleMesh {
        use std::collections::HashMap;
        let key = |v: Vec3| {
            (
                (v.x / tolerance).round() as i64,
                (v.y / tolerance).round() as i64,
                (v.z / tolerance).round() as i64,
            )
        };
        let mut map: HashMap<(i64, i64, i64), u32> = HashMap::new();
        let mut vertices = Vec::new();
        let remap: Vec<u32> = self
            .vertices
            .iter()
            .map(|&v| {
                *map.entry(key(v)).or_insert_with(|| {
                    vertices.push(v);
                    (vertices.len() - 1) as u32
                })
            })
            .collect();
        let triangles = self
            .triangles
            .iter()
            .map(|t| t.map(|i| remap[i as usize]))
            .collect();
        TriangleMesh::new(vertices, triangles, None).unwrap_or_else(|_| self.clone())
    }

    /// Rebuilds with new vertex positions and normals; topology is shared.
    fn with_vertices(&self, vertices: Vec<Vec3>, normals: Vec<Vec3>) -> TriangleMesh {
        TriangleMesh {
            vertices,
            triangles: self.triangles.clone(),
            normals,
            dropped_degenerate: self.dropped_degenerate,
        }
    }
}

fn triangle_area(vertices: &[Vec3], t: &[u32; 3]) -> f64 {
    let a = vertices[t[0] as usize];
    let b = vertices[t[1] as usize];
    let c = vertices[t[2] as usize];
    0.5 * (b - a).cross(c - a).length()
}

fn area_weighted_normals(vertices: &[Vec3], triangles: &[[u32; 3]]) -> Vec<Vec3> {
    let mut acc = vec![Vec3::ZERO; vertices.len()];
    for t in triangles {
        let a = vertices[t[0] as usize];
        let b = vertices[t[1] as usize];
        let c = vertices[t[2] as usize];
        // Cross product length is twice the area, which is the weight we want.
        let n = (b - a).cross(c - a);
        for &i in t {
            acc[i as usize] += n;
        }
    }
    acc.into_iter()
        .map(|n| {
            let u = n.normalized();
            if u.length_squared() > 0.0 {
                u
            } else {
                Vec3::Z
            }
        })
        .collect()
}

/// Rigid placement plus uniform scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub translation: Vec3,
    /// Extrinsic XYZ Euler angles in radians, each in `[-π, π]`.
    pub rotation: [f64; 3],
    pub scale: f64,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::IDENTITY
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        translation: Vec3::ZERO,
        rotation: [0.0; 3],
        scale: 1.0,
    };

    pub fn new(translation: Vec3, rotation: [f64; 3], scale: f64) -> Result<Pose, MeshError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(MeshError::InvalidPose(format!("scale must be positive, got {scale}")));
        }
        Ok(Pose {
            translation,
            rotation: rotation.map(wrap_angle),
            scale,
        })
    }

    pub fn rotation_matrix(&self) -> Mat3 {
        Mat3::from_euler_xyz(self.rotation)
    }

    pub fn to_affine(&self) -> Affine {
        Affine {
            linear: self.rotation_matrix().scaled(self.scale),
            translation: self.translation,
        }
    }
}

/// `p -> linear * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub linear: Mat3,
    pub translation: Vec3,
}

impl Affine {
    #[inline]
    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.linear * p + self.translation
    }

    pub fn inverse(&self) -> Option<Affine> {
        let inv = self.linear.inverse()?;
        Some(Affine {
            linear: inv,
            translation: -(inv * self.translation),
        })
    }
}

/// Applies scale, then rotation, then translation. Normals are rotated only.
pub fn transform_mesh(mesh: &TriangleMesh, pose: &Pose) -> TriangleMesh {
    let affine = pose.to_affine();
    let rot = pose.rotation_matrix();
    let vertices = mesh.vertices.iter().map(|&v| affine.apply(v)).collect();
    let normals = mesh.normals.iter().map(|&n| (rot * n).normalized()).collect();
    mesh.with_vertices(vertices, normals)
}

/// Applies an arbitrary affine map. Normals use the inverse transpose.
pub fn transform_mesh_affine(mesh: &TriangleMesh, affine: &Affine) -> TriangleMesh {
    let normal_map = affine
        .linear
        .inverse()
        .map(|m| m.transpose())
        .unwrap_or(Mat3::IDENTITY);
    let vertices = mesh.vertices.iter().map(|&v| affine.apply(v)).collect();
    let normals = mesh
        .normals
        .iter()
        .map(|&n| (normal_map * n).normalized())
        .collect();
    mesh.with_vertices(vertices, normals)
}

pub fn translate_mesh(mesh: &TriangleMesh, offset: Vec3) -> TriangleMesh {
    let vertices = mesh.vertices.iter().map(|&v| v + offset).collect();
    mesh.with_vertices(vertices, mesh.normals.clone())
}

/// Shifts the mesh along z so its lowest vertex sits on `z = 0`.
pub fn drop_to_ground(mesh: &TriangleMesh) -> TriangleMesh {
    let min_z = mesh
        .vertices
        .iter()
        .map(|v| v.z)
        .fold(f64::INFINITY, f64::min);
    if min_z == 0.0 {
        return mesh.clone();
    }
    let vertices = mesh
        .vertices
        .iter()
        .map(|&v| Vec3::new(v.x, v.y, v.z - min_z))
        .collect();
    mesh.with_vertices(vertices, mesh.normals.clone())
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::splat(f64::INFINITY),
        max: Vec3::splat(f64::NEG_INFINITY),
    };

    pub fn new(min: Vec3, max: Vec3) -> Aabb {
        debug_assert!(min.x <= max.x && min.y <= max.y && min.z <= max.z);
        Aabb { min, max }
    }

    pub fn from_points<I: IntoIterator<Item = Vec3>>(points: I) -> Aabb {
        points.into_iter().fold(Aabb::EMPTY, |b, p| b.grow(p))
    }

    #[inline]
    pub fn grow(self, p: Vec3) -> Aabb {
        Aabb {
            min: self.min.min(p),
            max: self.max.max(p),
        }
    }

    #[inline]
    pub fn union(self, o: Aabb) -> Aabb {
        Aabb {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().length()
    }

    pub fn longest_axis(&self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    /// Closed containment.
    pub fn contains(&self, p: Vec3) -> bool {
        (self.min.x..=self.max.x).contains(&p.x)
            && (self.min.y..=self.max.y).contains(&p.y)
            && (self.min.z..=self.max.z).contains(&p.z)
    }

    /// Interiors overlap in 3D. Touching faces do not count.
    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x < o.max.x
            && o.min.x < self.max.x
            && self.min.y < o.max.y
            && o.min.y < self.max.y
            && self.min.z < o.max.z
            && o.min.z < self.max.z
    }

    /// Interiors of the ground (xy) projections overlap.
    pub fn footprint_overlaps(&self, o: &Aabb) -> bool {
        self.min.x < o.max.x && o.min.x < self.max.x && self.min.y < o.max.y && o.min.y < self.max.y
    }

    pub fn translated(&self, d: Vec3) -> Aabb {
        Aabb {
            min: self.min + d,
            max: self.max + d,
        }
    }
}

/// Tight bounds over all vertices.
pub fn mesh_aabb(mesh: &TriangleMesh) -> Result<Aabb, MeshError> {
    if mesh.vertices.is_empty() {
        return Err(MeshError::Empty);
    }
    Ok(Aabb::from_points(mesh.vertices.iter().copied()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::unit_cube;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn identity_pose_keeps_vertices() {
        let cube = unit_cube();
        let out = transform_mesh(&cube, &Pose::IDENTITY);
        assert_eq!(out.vertices(), cube.vertices());
    }

    #[test]
    fn translation_moves_min_z() {
        let cube = unit_cube();
        let pose = Pose::new(Vec3::new(0.0, 0.0, 1.0), [0.0; 3], 1.0).unwrap();
        let b = mesh_aabb(&transform_mesh(&cube, &pose)).unwrap();
        assert_eq!(b.min.z, 1.0);
    }

    #[test]
    fn quarter_turn_about_z() {
        let mesh = TriangleMesh::new(
            vec![Vec3::X, Vec3::new(2.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
            None,
        )
        .unwrap();
        let pose = Pose::new(Vec3::ZERO, [0.0, 0.0, FRAC_PI_2], 1.0).unwrap();
        let p = transform_mesh(&mesh, &pose).vertices()[0];
        assert!((p - Vec3::Y).length() < 1e-9);
    }

    #[test]
    fn aabb_of_cube_and_scaled_cube() {
        let cube = unit_cube();
        let b = mesh_aabb(&cube).unwrap();
        assert_eq!((b.min, b.max), (Vec3::ZERO, Vec3::ONE));
        let pose = Pose::new(Vec3::ZERO, [0.0; 3], 2.0).unwrap();
        let b2 = mesh_aabb(&transform_mesh(&cube, &pose)).unwrap();
        assert_eq!(b2.max, Vec3::splat(2.0));
    }

    #[test]
    fn drop_to_ground_cases() {
        let cube = unit_cube();
        for dz in [-0.3, 0.0, 2.5] {
            let moved = translate_mesh(&cube, Vec3::new(0.25, -0.5, dz));
            let dropped = drop_to_ground(&moved);
            let b = mesh_aabb(&dropped).unwrap();
            assert!(b.min.z.abs() < 1e-9, "dz {dz}");
            for (a, d) in moved.vertices().iter().zip(dropped.vertices()) {
                assert_eq!((a.x, a.y), (d.x, d.y));
                assert!((d.z - (a.z - dz)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_triangles_are_dropped() {
        let m = TriangleMesh::new(
            vec![Vec3::ZERO, Vec3::X, Vec3::Y, Vec3::new(2.0, 0.0, 0.0)],
            vec![[0, 1, 2], [0, 1, 3]],
            None,
        )
        .unwrap();
        assert_eq!(m.triangles().len(), 1);
        assert_eq!(m.dropped_degenerate(), 1);
    }

    #[test]
    fn all_degenerate_is_empty() {
        let e = TriangleMesh::new(vec![Vec3::ZERO, Vec3::X, Vec3::X], vec![[0, 1, 2]], None);
        assert!(matches!(e, Err(MeshError::Empty)));
    }

    #[test]
    fn index_out_of_range_rejected() {
        let e = TriangleMesh::new(vec![Vec3::ZERO, Vec3::X, Vec3::Y], vec![[0, 1, 3]], None);
        assert!(matches!(e, Err(MeshError::Malformed(_))));
    }

    #[test]
    fn welding_cube_soup() {
        let cube = unit_cube();
        let mut verts = Vec::new();
        let mut tris = Vec::new();
        for t in 0..cube.triangles().len() {
            let base = verts.len() as u32;
            verts.extend(cube.triangle_vertices(t));
            tris.push([base, base + 1, base + 2]);
        }
        let soup = TriangleMesh::new(verts, tris, None).unwrap();
        assert_eq!(soup.vertices().len(), 36);
        let welded = soup.welded(1e-9);
        assert_eq!(welded.vertices().len(), 8);
        assert_eq!(welded.triangles().len(), 12);
    }
}
