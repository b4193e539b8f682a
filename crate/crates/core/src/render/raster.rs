use std::f64::consts::PI;

use rayon::prelude::*;

use crate::geometry::Ray;
use crate::math::{Color, Vec3};
use crate::sampler::CameraSpec;

use super::camera::Camera;
use super::scene::RenderScene;
use super::{IdBuffer, RenderBuffer, RenderSettings};

/// Near clipping distance in metres.
const NEAR: f64 = 1e-4;
const NONE: u32 = u32::MAX;

/// Nearest `(object, triangle)` per pixel centre.
pub struct Coverage {
    pub width: u32,
    pub height: u32,
    pub object: Vec<u32>,
    pub triangle: Vec<u32>,
    /// Interpolated `1 / depth`, 0 where nothing was drawn.
    pub inv_depth: Vec<f64>,
}

fn clip_near(poly: &[Vec3]) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(4);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (ina, inb) = (a.z >= NEAR, b.z >= NEAR);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let t = (NEAR - a.z) / (b.z - a.z);
            let mut p = a.lerp(b, t);
            p.z = NEAR;
            out.push(p);
        }
    }
    out
}

#[inline]
fn edge(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Z-buffered coverage of every triangle at pixel centres. No back-face
/// culling; pixels exactly on an edge count as covered, so shared edges
/// leave no gaps. Triangles are drawn in scene order and a later triangle
/// must be strictly nearer to win.
pub fn rasterize(scene: &RenderScene, cam: &Camera) -> Coverage {
    let (w, h) = (cam.width as usize, cam.height as usize);
    let mut cov = Coverage {
        width: cam.width,
        height: cam.height,
        object: vec![NONE; w * h],
        triangle: vec![NONE; w * h],
        inv_depth: vec![0.0; w * h],
    };
    for (oi, obj) in scene.objects.iter().enumerate() {
        let cverts: Vec<Vec3> = obj.mesh.vertices().iter().map(|&v| cam.to_camera(v)).collect();
        for (ti, tri) in obj.mesh.triangles().iter().enumerate() {
            let corners = [cverts[tri[0] as usize], cverts[tri[1] as usize], cverts[tri[2] as usize]];
            if corners.iter().all(|c| c.z < NEAR) {
                continue;
            }
            let poly = if corners.iter().all(|c| c.z >= NEAR) {
                corners.to_vec()
            } else {
                clip_near(&corners)
            };
            let screen: Vec<((f64, f64), f64)> = poly.iter().map(|&c| (cam.project_camera(c), 1.0 / c.z)).collect();
            for k in 1..screen.len().saturating_sub(1) {
                draw_triangle(&mut cov, [screen[0], screen[k], screen[k + 1]], oi as u32, ti as u32);
            }
        }
    }
    cov
}

fn draw_triangle(cov: &mut Coverage, s: [((f64, f64), f64); 3], object: u32, triangle: u32) {
    let [(p0, w0), (p1, w1), (p2, w2)] = s;
    let area = edge(p0, p1, p2);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    let (w, h) = (cov.width as i64, cov.height as i64);
    let min_x = p0.0.min(p1.0).min(p2.0);
    let max_x = p0.0.max(p1.0).max(p2.0);
    let min_y = p0.1.min(p1.1).min(p2.1);
    let max_y = p0.1.max(p1.1).max(p2.1);
    let x0 = ((min_x - 0.5).ceil() as i64).max(0);
    let x1 = ((max_x - 0.5).floor() as i64).min(w - 1);
    let y0 = ((min_y - 0.5).ceil() as i64).max(0);
    let y1 = ((max_y - 0.5).floor() as i64).min(h - 1);
    if x0 > x1 || y0 > y1 {
        return;
    }
    let inv_area = 1.0 / area;
    for y in y0..=y1 {
        let py = y as f64 + 0.5;
        for x in x0..=x1 {
            let p = (x as f64 + 0.5, py);
            let b0 = edge(p1, p2, p) * inv_area;
            let b1 = edge(p2, p0, p) * inv_area;
            let b2 = edge(p0, p1, p) * inv_area;
            if b0 < 0.0 || b1 < 0.0 || b2 < 0.0 {
                continue;
            }
            let inv_z = b0 * w0 + b1 * w1 + b2 * w2;
            let i = (y * w + x) as usize;
            if inv_z > cov.inv_depth[i] {
                cov.inv_depth[i] = inv_z;
                cov.object[i] = object;
                cov.triangle[i] = triangle;
            }
        }
    }
}

/// Ray/plane hit with unclamped barycentrics `(t, u, v)`.
fn plane_hit(ray: &Ray, v: [Vec3; 3]) -> Option<(f64, f64, f64)> {
    let e1 = v[1] - v[0];
    let e2 = v[2] - v[0];
    let p = ray.direction.cross(e2);
    let det = e1.dot(p);
    if det == 0.0 {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - v[0];
    let q = s.cross(e1);
    Some((e2.dot(q) * inv, s.dot(p) * inv, ray.direction.dot(q) * inv))
}

/// Local shading: Lambert plus normalized Blinn-Phong, lit by a point source
/// at each light centre. No shadows, no indirect light.
fn shade(scene: &RenderScene, cam: &Camera, cov: &Coverage, i: usize, radiance: &[Color]) -> Color {
    let (oi, ti) = (cov.object[i], cov.triangle[i]);
    if oi == NONE {
        return scene.environment;
    }
    let w = cov.width as usize;
    let ray = cam.ray((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
    let obj = &scene.objects[oi as usize];
    let Some((t, u, v)) = plane_hit(&ray, obj.mesh.triangle_vertices(ti as usize)) else {
        return Vec3::ZERO;
    };
    let u = u.clamp(0.0, 1.0);
    let v = v.clamp(0.0, 1.0 - u);
    let hit = scene.surface_hit(oi as usize, ti as usize, [u, v], ray.at(t.max(0.0)), ray.direction);
    let n = hit.shading_normal;
    let sp = obj.surface.resolve(hit.point, n);
    let wo = -ray.direction;
    let kd = sp.albedo * ((1.0 - sp.metalness) / PI);
    let ks = Vec3::splat(0.04 * sp.specular).lerp(sp.albedo, sp.metalness);
    let exponent = (2.0 / (sp.roughness * sp.roughness) - 2.0).clamp(1.0, 4096.0);
    let norm = (exponent + 8.0) / (8.0 * PI);
    let mut lo = sp.albedo.mul_elem(scene.environment);
    for (light, le) in scene.lights.iter().zip(radiance) {
        let to = light.center - hit.point;
        let d2 = to.length_squared();
        if d2 == 0.0 {
            continue;
        }
        let wi = to / d2.sqrt();
        let cos_s = n.dot(wi);
        let cos_l = -wi.dot(light.normal);
        if cos_s <= 0.0 || cos_l <= 0.0 {
            continue;
        }
        let irradiance = *le * (light.area() * cos_l * cos_s / d2);
        let half = (wi + wo).normalized();
        let spec = ks * (norm * n.dot(half).max(0.0).powf(exponent));
        lo += (kd + spec).mul_elem(irradiance);
    }
    lo
}

/// Rasterizes at twice the output resolution and box-filters down.
pub fn render_rasterized(scene: &RenderScene, camera: &CameraSpec, _settings: &RenderSettings) -> RenderBuffer {
    const SS: u32 = 2;
    let cam = Camera::with_resolution(camera, camera.width * SS, camera.height * SS);
    let cov = rasterize(scene, &cam);
    let radiance: Vec<Color> = scene.lights.iter().map(|l| l.radiance()).collect();
    let (w, h) = (camera.width as usize, camera.height as usize);
    let sw = w * SS as usize;
    let mut pixels = vec![Vec3::ZERO; w * h];
    pixels.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, px) in row.iter_mut().enumerate() {
            let mut sum = Vec3::ZERO;
            for sy in 0..SS as usize {
                for sx in 0..SS as usize {
                    let i = (y * SS as usize + sy) * sw + x * SS as usize + sx;
                    sum += shade(scene, &cam, &cov, i, &radiance);
                }
            }
            *px = sum / (SS * SS) as f64;
        }
    });
    let mut clamped = 0;
    for p in &mut pixels {
        if !(p.is_finite() && p.min_component() >= 0.0) {
            *p = Vec3::ZERO;
            clamped += 1;
        }
    }
    RenderBuffer {
        width: camera.width,
        height: camera.height,
        pixels,
        clamped,
    }
}

/// Instance labels at output resolution with centre sampling.
pub fn render_id_pass(scene: &RenderScene, camera: &CameraSpec) -> IdBuffer {
    let cov = rasterize(scene, &Camera::new(camera));
    let ids = cov
        .object
        .iter()
        .map(|&o| if o == NONE { 0 } else { scene.objects[o as usize].label })
        .collect();
    IdBuffer {
        width: camera.width,
        height: camera.height,
        ids,
    }
}
