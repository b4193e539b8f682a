use rayon::prelude::*;

use crate::geometry::Ray;
use crate::material::{brdf_pdf, evaluate_brdf, sample_brdf};
use crate::math::{Color, Vec3};
use crate::rng::{derive_seed, Pcg32, UniformSource};
use crate::sampler::{AreaLight, CameraSpec};

use super::camera::Camera;
use super::scene::RenderScene;
use super::{RenderBuffer, RenderSettings, IdBuffer};

/// Russian roulette starts after this many bounces.
const ROULETTE_DEPTH: u32 = 3;
const TILE_ROWS: usize = 8;

#[inline]
fn power_heuristic(a: f64, b: f64) -> f64 {
    let (a2, b2) = (a * a, b * b);
    if a2 + b2 == 0.0 {
        0.0
    } else {
        a2 / (a2 + b2)
    }
}

/// Distance to the emitting side of a rectangular light, if the ray hits it.
#[inline]
fn hit_light(light: &AreaLight, ray: &Ray, t_max: f64) -> Option<f64> {
    let denom = ray.direction.dot(light.normal);
    if denom >= 0.0 {
        return None;
    }
    let t = (light.center - ray.origin).dot(light.normal) / denom;
    if !(t > 0.0 && t < t_max) {
        return None;
    }
    let local = ray.at(t) - light.center;
    let (u, v) = light.axes();
    (local.dot(u).abs() <= light.half_extents[0] && local.dot(v).abs() <= light.half_extents[1]).then_some(t)
}

struct Tracer<'a> {
    scene: &'a RenderScene,
    radiance: Vec<Color>,
    max_depth: u32,
}

impl Tracer<'_> {
    /// Solid-angle pdf of picking `light` and a point on it seen at distance
    /// `dist` under cosine `cos_l`.
    #[inline]
    fn light_pdf(&self, light: &AreaLight, dist: f64, cos_l: f64) -> f64 {
        dist * dist / (cos_l * light.area() * self.scene.lights.len() as f64)
    }

    /// Emission picked up by a BRDF-sampled ray, MIS-weighted against light sampling.
    fn emitted_along(&self, ray: &Ray, t_max: f64, brdf_pdf: f64) -> Color {
        let mut best: Option<(f64, usize)> = None;
        for (i, l) in self.scene.lights.iter().enumerate() {
            if let Some(t) = hit_light(l, ray, best.map_or(t_max, |b| b.0)) {
                best = Some((t, i));
            }
        }
        let Some((t, i)) = best else { return Vec3::ZERO };
        let light = &self.scene.lights[i];
        let cos_l = -ray.direction.dot(light.normal);
        let w = power_heuristic(brdf_pdf, self.light_pdf(light, t, cos_l));
        self.radiance[i] * w
    }

    fn trace<R: UniformSource>(&self, mut ray: Ray, rng: &mut R) -> Color {
        let scene = self.scene;
        let eps = scene.epsilon();
        let mut beta = Vec3::ONE;
        let mut l = Vec3::ZERO;
        let mut last_pdf = 0.0;
        for depth in 0..=self.max_depth {
            let hit = scene.intersect(&ray);
            if depth > 0 && !scene.lights.is_empty() {
                let t_max = hit.map_or(f64::INFINITY, |h| (h.point - ray.origin).length());
                l += beta.mul_elem(self.emitted_along(&ray, t_max, last_pdf));
            }
            let Some(hit) = hit else {
                l += beta.mul_elem(scene.environment);
                break;
            };
            if depth == self.max_depth {
                break;
            }
            let wo = -ray.direction;
            let n = hit.shading_normal;
            let ng = hit.geometric_normal;
            let surface = scene.objects[hit.object].surface.resolve(hit.point, n);
            let origin = hit.point + ng * eps;

            if !scene.lights.is_empty() {
                let k = ((rng.uniform() * scene.lights.len() as f64) as usize).min(scene.lights.len() - 1);
                let light = &scene.lights[k];
                let (u, v) = light.axes();
                let s = light.center
                    + u * ((2.0 * rng.uniform() - 1.0) * light.half_extents[0])
                    + v * ((2.0 * rng.uniform() - 1.0) * light.half_extents[1]);
                let to = s - origin;
                let dist = to.length();
                let wi = to / dist;
                let cos_l = -wi.dot(light.normal);
                let cos_s = wi.dot(n);
                if cos_l > 0.0 && cos_s > 0.0 && wi.dot(ng) > 0.0 && dist > 0.0 {
                    let f = evaluate_brdf(&surface, wi, wo, n);
                    if f.max_component() > 0.0 && !scene.occluded(&Ray::new(origin, wi), dist * (1.0 - 1e-9)) {
                        let pdf_l = self.light_pdf(light, dist, cos_l);
                        let w = power_heuristic(pdf_l, brdf_pdf(&surface, wi, wo, n));
                        l += beta.mul_elem(f).mul_elem(self.radiance[k]) * (cos_s * w / pdf_l);
                    }
                }
            }

            let Some(bs) = sample_brdf(&surface, wo, n, rng) else { break };
            if bs.direction.dot(ng) <= 0.0 {
                break;
            }
            beta = beta.mul_elem(bs.reflectance) * (bs.direction.dot(n) / bs.pdf);
            last_pdf = bs.pdf;
            ray = Ray::new(origin, bs.direction);

            if depth + 1 >= ROULETTE_DEPTH {
                let q = beta.max_component().min(1.0);
                if q <= 0.0 || rng.uniform() >= q {
                    break;
                }
                beta = beta / q;
            }
        }
        l
    }
}

/// Unidirectional path tracing with next-event estimation.
///
/// Lights are not part of the geometry: camera rays do not see them and they
/// cast no shadows. Each `(pixel, sample)` pair owns its random stream, so
/// the result does not depend on how rows are spread over threads.
pub fn render_pathtraced(scene: &RenderScene, camera: &CameraSpec, settings: &RenderSettings) -> RenderBuffer {
    let cam = Camera::new(camera);
    let (w, h) = (camera.width as usize, camera.height as usize);
    let tracer = Tracer {
        scene,
        radiance: scene.lights.iter().map(AreaLight::radiance).collect(),
        max_depth: settings.max_depth,
    };
    let spp = settings.samples_per_pixel.max(1);
    let mut pixels = vec![Vec3::ZERO; w * h];
    let clamped: usize = pixels
        .par_chunks_mut(w * TILE_ROWS)
        .enumerate()
        .map(|(tile, rows)| {
            let mut clamped = 0usize;
            for (i, px) in rows.iter_mut().enumerate() {
                let index = tile * w * TILE_ROWS + i;
                let (x, y) = (index % w, index / w);
                let seed = derive_seed(&[settings.seed, index as u64]);
                let mut sum = Vec3::ZERO;
                for s in 0..spp {
                    let mut rng = Pcg32::new(seed, s as u64);
                    let jx = rng.uniform();
                    let jy = rng.uniform();
                    let c = tracer.trace(cam.ray(x as f64 + jx, y as f64 + jy), &mut rng);
                    if c.is_finite() && c.min_component() >= 0.0 {
                        sum += c;
                    } else {
                        clamped += 1;
                    }
                }
                *px = sum / spp as f64;
            }
            clamped
        })
        .sum();
    if clamped > 0 {
        log::debug!("path tracer discarded {clamped} non-finite or negative samples");
    }
    RenderBuffer {
        width: camera.width,
        height: camera.height,
        pixels,
        clamped,
    }
}

/// Label of the surface seen by one ray through each pixel centre.
pub fn primary_visibility_ids(scene: &RenderScene, camera: &CameraSpec) -> IdBuffer {
    let cam = Camera::new(camera);
    let w = camera.width as usize;
    let ids = (0..w * camera.height as usize)
        .into_par_iter()
        .map(|i| {
            let ray = cam.ray((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
            scene
                .bvh()
                .and_then(|b| b.intersect(&ray))
                .map_or(0, |hit| scene.objects[hit.instance].label)
        })
        .collect();
    IdBuffer {
        width: camera.width,
        height: camera.height,
        ids,
    }
}
