//! Procedural base meshes used as distractors and test fixtures.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::math::Vec3;

use super::TriangleMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveShape {
    Cube,
    Sphere,
    Cone,
    Cylinder,
    Torus,
    Icosphere,
}

impl PrimitiveShape {
    pub const ALL: [PrimitiveShape; 6] = [
        PrimitiveShape::Cube,
        PrimitiveShape::Sphere,
        PrimitiveShape::Cone,
        PrimitiveShape::Cylinder,
        PrimitiveShape::Torus,
        PrimitiveShape::Icosphere,
    ];

    /// A mesh centered on the origin, roughly unit-sized.
    pub fn mesh(self) -> TriangleMesh {
        match self {
            PrimitiveShape::Cube => centered_cube(),
            PrimitiveShape::Sphere => uv_sphere(16, 24),
            PrimitiveShape::Cone => cone(24),
            PrimitiveShape::Cylinder => cylinder(24),
            PrimitiveShape::Torus => torus(0.35, 0.15, 24, 12),
            PrimitiveShape::Icosphere => icosphere(2),
        }
    }
}

const CUBE_TRIS: [[u32; 3]; 12] = [
    [0, 2, 1],
    [0, 3, 2],
    [4, 5, 6],
    [4, 6, 7],
    [0, 1, 5],
    [0, 5, 4],
    [1, 2, 6],
    [1, 6, 5],
    [2, 3, 7],
    [2, 7, 6],
    [3, 0, 4],
    [3, 4, 7],
];

fn cube_with(min: f64, max: f64) -> TriangleMesh {
    let v = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
    let vertices = vec![
        v(min, min, min),
        v(max, min, min),
        v(max, max, min),
        v(min, max, min),
        v(min, min, max),
        v(max, min, max),
        v(max, max, max),
        v(min, max, max),
    ];
    TriangleMesh::new(vertices, CUBE_TRIS.to_vec(), None).expect("cube is valid")
}

/// Axis-aligned cube spanning `[0,1]³`, outward winding.
pub fn unit_cube() -> TriangleMesh {
    cube_with(0.0, 1.0)
}

/// Cube spanning `[-0.5,0.5]³`.
pub fn centered_cube() -> TriangleMesh {
    cube_with(-0.5, 0.5)
}

/// Axis-aligned rectangle at height `z` spanning `[x0,x1]×[y0,y1]`, facing +z.
pub fn quad_xy(x0: f64, x1: f64, y0: f64, y1: f64, z: f64) -> TriangleMesh {
    let vertices = vec![
        Vec3::new(x0, y0, z),
        Vec3::new(x1, y0, z),
        Vec3::new(x1, y1, z),
        Vec3::new(x0, y1, z),
    ];
    TriangleMesh::new(vertices, vec![[0, 1, 2], [0, 2, 3]], None).expect("quad is valid")
}

pub fn uv_sphere(stacks: u32, slices: u32) -> TriangleMesh {
    let mut vertices = vec![Vec3::new(0.0, 0.0, 0.5)];
    for i in 1..stacks {
        let theta = PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let phi = TAU * j as f64 / slices as f64;
            vertices.push(
                Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()) * 0.5,
            );
        }
    }
    vertices.push(Vec3::new(0.0, 0.0, -0.5));
    let bottom = vertices.len() as u32 - 1;
    let ring = |i: u32, j: u32| 1 + (i - 1) * slices + (j % slices);
    let mut tris = Vec::new();
    for j in 0..slices {
        tris.push([0, ring(1, j), ring(1, j + 1)]);
        tris.push([bottom, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            tris.push([a, c, d]);
            tris.push([a, d, b]);
        }
    }
    TriangleMesh::new(vertices, tris, None).expect("sphere is valid")
}

fn ring_points(n: u32, radius: f64, z: f64) -> impl Iterator<Item = Vec3> {
    (0..n).map(move |j| {
        let phi = TAU * j as f64 / n as f64;
        Vec3::new(radius * phi.cos(), radius * phi.sin(), z)
    })
}

pub fn cone(slices: u32) -> TriangleMesh {
    let mut vertices: Vec<Vec3> = ring_points(slices, 0.5, -0.5).collect();
    vertices.push(Vec3::new(0.0, 0.0, 0.5));
    vertices.push(Vec3::new(0.0, 0.0, -0.5));
    let apex = slices;
    let base = slices + 1;
    let mut tris = Vec::new();
    for j in 0..slices {
        let k = (j + 1) % slices;
        tris.push([j, k, apex]);
        tris.push([base, k, j]);
    }
    TriangleMesh::new(vertices, tris, None).expect("cone is valid")
}

pub fn cylinder(slices: u32) -> TriangleMesh {
    let mut vertices: Vec<Vec3> = ring_points(slices, 0.5, -0.5).collect();
    vertices.extend(ring_points(slices, 0.5, 0.5));
    vertices.push(Vec3::new(0.0, 0.0, -0.5));
    vertices.push(Vec3::new(0.0, 0.0, 0.5));
    let (bot, top) = (2 * slices, 2 * slices + 1);
    let mut tris = Vec::new();
    for j in 0..slices {
        let k = (j + 1) % slices;
        tris.push([j, k, slices + k]);
        tris.push([j, slices + k, slices + j]);
        tris.push([bot, k, j]);
        tris.push([top, slices + j, slices + k]);
    }
    TriangleMesh::new(vertices, tris, None).expect("cylinder is valid")
}

pub fn torus(major: f64, minor: f64, segments: u32, sides: u32) -> TriangleMesh {
    let mut vertices = Vec::new();
    for i in 0..segments {
        let u = TAU * i as f64 / segments as f64;
        for j in 0..sides {
            let v = TAU * j as f64 / sides as f64;
            let r = major + minor * v.cos();
            vertices.push(Vec3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: u32, j: u32| (i % segments) * sides + (j % sides);
    let mut tris = Vec::new();
    for i in 0..segments {
        for j in 0..sides {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    TriangleMesh::new(vertices, tris, None).expect("torus is valid")
}

pub fn icosphere(subdivisions: u32) -> TriangleMesh {
    use std::collections::HashMap;
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalized() * 0.5)
    .collect();
    let mut tris: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Vec3>| {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let m = ((vertices[a as usize] + vertices[b as usize]) * 0.5).normalized() * 0.5;
                vertices.push(m);
                vertices.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    TriangleMesh::new(vertices, tris, None).expect("icosphere is valid")
}
