use std::sync::Arc;

use crate::geometry::{Bvh, TriangleMesh};
use crate::material::{MaterialSpec, SurfacePoint};
use crate::math::{Color, Vec3};
use crate::sampler::{AreaLight, ObjectKind, SceneBox, SceneLayout};

use super::RenderError;

/// Vertex normals more than 30° from the face normal are ignored.
const SHADING_NORMAL_COS: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, PartialEq)]
pub enum Surface {
    Material(MaterialSpec),
    /// Ideal Lambertian reflector with no specular lobe.
    Lambertian(Color),
}

impl Surface {
    #[inline]
    pub fn resolve(&self, point: Vec3, normal: Vec3) -> SurfacePoint {
        match self {
            Surface::Material(m) => m.resolve(point, normal),
            Surface::Lambertian(c) => SurfacePoint::diffuse(*c),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenderObject {
    /// World-space geometry.
    pub mesh: Arc<TriangleMesh>,
    pub surface: Surface,
    /// Value written by the id pass; 0 for anything that is not a target.
    pub label: u32,
}

/// Everything the renderers need, with the acceleration structure built.
#[derive(Debug)]
pub struct RenderScene {
    pub objects: Vec<RenderObject>,
    pub lights: Vec<AreaLight>,
    /// Radiance of rays that leave the scene.
    pub environment: Color,
    bvh: Option<Bvh>,
    /// Used to scale ray-origin offsets.
    scale: f64,
}

/// Flat rectangle with corners `a, b, c, d` in order.
fn quad(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> TriangleMesh {
    TriangleMesh::new(vec![a, b, c, d], vec![[0, 1, 2], [0, 2, 3]], None)
        .expect("non-degenerate quad")
}

/// Ground plane plus four walls, open at the top.
pub fn scene_box_meshes(b: &SceneBox) -> Vec<TriangleMesh> {
    let h = b.side / 2.0;
    let (cx, cy, top) = (b.center.x, b.center.y, b.wall_height);
    let p = |x: f64, y: f64, z: f64| Vec3::new(cx + x * h, cy + y * h, z);
    vec![
        quad(p(-1.0, -1.0, 0.0), p(1.0, -1.0, 0.0), p(1.0, 1.0, 0.0), p(-1.0, 1.0, 0.0)),
        quad(p(-1.0, -1.0, 0.0), p(-1.0, -1.0, top), p(1.0, -1.0, top), p(1.0, -1.0, 0.0)),
        quad(p(1.0, -1.0, 0.0), p(1.0, -1.0, top), p(1.0, 1.0, top), p(1.0, 1.0, 0.0)),
        quad(p(1.0, 1.0, 0.0), p(1.0, 1.0, top), p(-1.0, 1.0, top), p(-1.0, 1.0, 0.0)),
        quad(p(-1.0, 1.0, 0.0), p(-1.0, 1.0, top), p(-1.0, -1.0, top), p(-1.0, -1.0, 0.0)),
    ]
}

#[derive(Debug, Clone, Copy)]
pub struct SurfaceHit {
    pub object: usize,
    pub triangle: usize,
    pub point: Vec3,
    /// Geometric normal facing the incoming ray.
    pub geometric_normal: Vec3,
    /// Shading normal on the same side as `geometric_normal`.
    pub shading_normal: Vec3,
}

impl RenderScene {
    pub fn new(objects: Vec<RenderObject>, lights: Vec<AreaLight>, environment: Color) -> Result<RenderScene, RenderError> {
        for l in &lights {
            let ok = l.power >= 0.0
                && l.power.is_finite()
                && l.half_extents.iter().all(|h| *h > 0.0 && h.is_finite())
                && (l.normal.length() - 1.0).abs() < 1e-6
                && l.color.is_finite()
                && l.color.min_component() >= 0.0;
            if !ok {
                return Err(RenderError::InvalidScene(format!("invalid area light {l:?}")));
            }
        }
        if !(environment.is_finite() && environment.min_component() >= 0.0) {
            return Err(RenderError::InvalidScene("environment radiance must be finite and >= 0".into()));
        }
        let meshes: Vec<&TriangleMesh> = objects.iter().map(|o| o.mesh.as_ref()).collect();
        let bvh = if meshes.iter().all(|m| m.triangles().is_empty()) {
            None
        } else {
            Some(Bvh::build(&meshes).map_err(|e| RenderError::InvalidScene(e.to_string()))?)
        };
        let scale = bvh
            .as_ref()
            .map(|b| {
                let bb = b.bounds();
                bb.min.abs().max(bb.max.abs()).max_component().max(1.0)
            })
            .unwrap_or(1.0);
        Ok(RenderScene {
            objects,
            lights,
            environment,
            bvh,
            scale,
        })
    }

    /// Targets keep their instance id, distractors and the scene box write 0.
    pub fn from_layout(layout: &SceneLayout) -> Result<RenderScene, RenderError> {
        let mut objects: Vec<RenderObject> = layout
            .objects()
            .map(|o| RenderObject {
                mesh: o.mesh.clone(),
                surface: Surface::Material(o.material.clone()),
                label: if o.kind == ObjectKind::Target { o.id } else { 0 },
            })
            .collect();
        for m in scene_box_meshes(&layout.scene_box) {
            objects.push(RenderObject {
                mesh: Arc::new(m),
                surface: Surface::Material(layout.background.clone()),
                label: 0,
            });
        }
        RenderScene::new(objects, layout.lights.clone(), Vec3::ZERO)
    }

    pub fn bvh(&self) -> Option<&Bvh> {
        self.bvh.as_ref()
    }

    /// Offset applied to secondary-ray origins.
    #[inline]
    pub fn epsilon(&self) -> f64 {
        1e-7 * self.scale
    }

    pub fn triangle_count(&self) -> usize {
        self.bvh.as_ref().map_or(0, Bvh::triangle_count)
    }

    /// Nearest surface along the ray, with normals oriented against `ray`.
    pub fn intersect(&self, ray: &crate::geometry::Ray) -> Option<SurfaceHit> {
        let hit = self.bvh.as_ref()?.intersect(ray)?;
        Some(self.surface_hit(hit.instance, hit.local_triangle, hit.barycentric, ray.at(hit.distance), ray.direction))
    }

    pub fn occluded(&self, ray: &crate::geometry::Ray, t_max: f64) -> bool {
        self.bvh.as_ref().is_some_and(|b| b.occluded(ray, t_max))
    }

    /// Normals at a point of a triangle, facing against `incoming`.
    pub fn surface_hit(&self, object: usize, triangle: usize, bary: [f64; 2], point: Vec3, incoming: Vec3) -> SurfaceHit {
        let mesh = &self.objects[object].mesh;
        let mut ng = mesh.face_normal(triangle);
        let [i0, i1, i2] = mesh.triangles()[triangle];
        let ns = mesh.normals();
        let [u, v] = bary;
        // Crease rule: a vertex normal far from this face is replaced by the face normal.
        let pick = |i: u32| {
            let n = ns[i as usize];
            if n.dot(ng) >= SHADING_NORMAL_COS {
                n
            } else {
                ng
            }
        };
        let interp = pick(i0) * (1.0 - u - v) + pick(i1) * u + pick(i2) * v;
        let interp_len = interp.length();
        let mut shading = if interp_len > 0.0 { interp / interp_len } else { ng };
        if ng.dot(incoming) > 0.0 {
            ng = -ng;
            shading = -shading;
        }
        if shading.dot(incoming) >= 0.0 {
            shading = ng;
        }
        SurfaceHit {
            object,
            triangle,
            point,
            geometric_normal: ng,
            shading_normal: shading,
        }
    }
}
