//! Domain-randomization draws: object sets, poses, camera, scene box,
//! lights, distractors and texture assignment.
//!
//! Every function takes the random source explicitly. A whole scene is drawn
//! sequentially from one stream, so a `(seed, image index)` pair fixes it.

mod catalog;
mod config;

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{mesh_aabb, transform_mesh, Aabb, MeshError, Pose, PrimitiveShape, TriangleMesh};
use crate::material::{MaterialSpec, MIN_ROUGHNESS};
use crate::math::{Color, Vec3};

pub use catalog::{Assets, CatalogConfig, Category, CategoryConfig, ImageSet, ObjectCatalog};
pub use config::{
    CameraConfig, DistractorConfig, LightConfig, ObjectConfig, SamplerConfig, SceneBoxConfig,
    TexturePolicy,
};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("asset error: {0}")]
    Asset(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[inline]
fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Axis-aligned rectangle on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect2 {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect2 {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Rect2 {
        Rect2 { min, max }
    }

    pub fn centered(cx: f64, cy: f64, side: f64) -> Rect2 {
        let h = side / 2.0;
        Rect2::new([cx - h, cy - h], [cx + h, cy + h])
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn center(&self) -> [f64; 2] {
        [(self.min[0] + self.max[0]) / 2.0, (self.min[1] + self.max[1]) / 2.0]
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains_rect(&self, o: &Rect2) -> bool {
        self.min[0] <= o.min[0] && self.min[1] <= o.min[1] && o.max[0] <= self.max[0] && o.max[1] <= self.max[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectsArea {
    pub rect: Rect2,
    /// Midpoint of `rect` on the ground (z = 0).
    pub center: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneBox {
    /// Ground centre, z = 0.
    pub center: Vec3,
    pub side: f64,
    pub wall_height: f64,
}

impl SceneBox {
    pub fn ground(&self) -> Rect2 {
        Rect2::centered(self.center.x, self.center.y, self.side)
    }

    pub fn ground_area(&self) -> f64 {
        self.side * self.side
    }

    pub fn bounds(&self) -> Aabb {
        let h = self.side / 2.0;
        Aabb::new(
            Vec3::new(self.center.x - h, self.center.y - h, 0.0),
            Vec3::new(self.center.x + h, self.center.y + h, self.wall_height),
        )
    }

    /// Strictly inside the walls, above the ground and below the rim.
    pub fn contains_strictly(&self, p: Vec3) -> bool {
        let h = self.side / 2.0;
        (p.x - self.center.x).abs() < h && (p.y - self.center.y).abs() < h && p.z > 0.0 && p.z < self.wall_height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub position: Vec3,
    pub look_at: Vec3,
    pub focal_length_mm: f64,
    pub sensor_width_mm: f64,
    /// Horizontal field of view, radians.
    pub fov: f64,
    pub width: u32,
    pub height: u32,
}

/// Horizontal field of view of a pinhole camera.
pub fn field_of_view(sensor_width_mm: f64, focal_length_mm: f64) -> f64 {
    2.0 * (sensor_width_mm / (2.0 * focal_length_mm)).atan()
}

/// Cartesian offset of a point at radius `r`, polar angle `theta` from +z
/// and azimuth `phi` from +x.
pub fn spherical_offset(r: f64, theta: f64, phi: f64) -> Vec3 {
    Vec3::new(r * phi.cos() * theta.sin(), r * phi.sin() * theta.sin(), r * theta.cos())
}

impl CameraSpec {
    /// Camera on the sphere of radius `r` around `center`, looking at `look_at`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        center: Vec3,
        r: f64,
        theta: f64,
        phi: f64,
        look_at: Vec3,
        focal_length_mm: f64,
        sensor_width_mm: f64,
        width: u32,
        height: u32,
    ) -> CameraSpec {
        CameraSpec {
            r,
            theta,
            phi,
            position: center + spherical_offset(r, theta, phi),
            look_at,
            focal_length_mm,
            sensor_width_mm,
            fov: field_of_view(sensor_width_mm, focal_length_mm),
            width,
            height,
        }
    }

    /// Forward, right and up unit vectors. World up is +z.
    pub fn basis(&self) -> (Vec3, Vec3, Vec3) {
        let forward = (self.look_at - self.position).normalized();
        let mut right = forward.cross(Vec3::Z);
        if right.length_squared() < 1e-18 {
            right = Vec3::X;
        }
        let right = right.normalized();
        let up = right.cross(forward);
        (forward, right, up)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaLight {
    pub center: Vec3,
    pub half_extents: [f64; 2],
    /// Emitting side.
    pub normal: Vec3,
    pub power: f64,
    pub color: Color,
}

impl AreaLight {
    pub fn area(&self) -> f64 {
        4.0 * self.half_extents[0] * self.half_extents[1]
    }

    /// In-plane unit axes matching `half_extents`.
    pub fn axes(&self) -> (Vec3, Vec3) {
        self.normal.orthonormal_basis()
    }

    /// Radiance leaving the emitting side; a one-sided Lambertian emitter of
    /// power `P` and area `A` has `L = P / (π A)`.
    pub fn radiance(&self) -> Color {
        self.color * (self.power / (PI * self.area()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Target,
    Distractor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectSource {
    Category(usize),
    Primitive(PrimitiveShape),
}

#[derive(Debug, Clone)]
pub struct ObjectInstance {
    /// 1-based, unique within the scene. Targets come first.
    pub id: u32,
    pub kind: ObjectKind,
    pub source: ObjectSource,
    pub pose: Pose,
    pub material: MaterialSpec,
    /// World-space mesh.
    pub mesh: Arc<TriangleMesh>,
    pub aabb: Aabb,
}

impl ObjectInstance {
    pub fn category(&self) -> Option<usize> {
        match self.source {
            ObjectSource::Category(c) => Some(c),
            ObjectSource::Primitive(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SceneLayout {
    pub targets: Vec<ObjectInstance>,
    pub distractors: Vec<ObjectInstance>,
    pub objects_area: ObjectsArea,
    pub scene_box: SceneBox,
    pub camera: CameraSpec,
    pub lights: Vec<AreaLight>,
    pub background: MaterialSpec,
    /// Targets dropped because no free spot was found.
    pub placement_failures: usize,
    pub distractor_failures: usize,
}

impl SceneLayout {
    pub fn objects(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.targets.iter().chain(self.distractors.iter())
    }
}

/// Category index per object: `n ~ U{0..=max}` drawn round-robin over a
/// shuffled category order.
pub fn sample_object_set<R: Rng + ?Sized>(categories: usize, max_count: usize, rng: &mut R) -> Vec<usize> {
    if categories == 0 {
        return Vec::new();
    }
    let n = rng.random_range(0..=max_count);
    assign_categories(categories, n, rng)
}

/// `n` category indices, round-robin over a shuffled category order.
pub fn assign_categories<R: Rng + ?Sized>(categories: usize, n: usize, rng: &mut R) -> Vec<usize> {
    if categories == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..categories).collect();
    order.shuffle(rng);
    (0..n).map(|i| order[i % categories]).collect()
}

#[derive(Debug, Clone)]
pub struct Placement {
    pub pose: Pose,
    pub mesh: TriangleMesh,
    pub aabb: Aabb,
}

/// Random rotation within `limits` (radians, per axis) and a random ground
/// position inside `region` whose footprint avoids every `placed` footprint.
/// The mesh is dropped onto z = 0. `None` after `max_attempts` misses.
pub fn sample_pose<R: Rng + ?Sized>(
    mesh: &TriangleMesh,
    placed: &[Aabb],
    region: Rect2,
    limits: [f64; 3],
    rng: &mut R,
    max_attempts: usize,
) -> Option<Placement> {
    let rotation = limits.map(|l| uniform(rng, -l, l));
    let rotated = transform_mesh(mesh, &Pose::new(Vec3::ZERO, rotation, 1.0).ok()?);
    let local = mesh_aabb(&rotated).ok()?;
    let half = local.extent() / 2.0;
    for _ in 0..max_attempts {
        let axis = |rng: &mut R, lo: f64, hi: f64, h: f64| {
            if hi - lo > 2.0 * h {
                uniform(rng, lo + h, hi - h)
            } else {
                rng.random::<f64>();
                (lo + hi) / 2.0
            }
        };
        let cx = axis(rng, region.min[0], region.max[0], half.x);
        let cy = axis(rng, region.min[1], region.max[1], half.y);
        let local_center = local.center();
        let translation = Vec3::new(cx - local_center.x, cy - local_center.y, -local.min.z);
        let candidate = local.translated(translation);
        if placed.iter().any(|p| p.footprint_overlaps(&candidate)) {
            continue;
        }
        let pose = Pose::new(translation, rotation, 1.0).ok()?;
        let world = transform_mesh(mesh, &pose);
        let aabb = mesh_aabb(&world).ok()?;
        if placed.iter().any(|p| p.footprint_overlaps(&aabb)) {
            continue;
        }
        return Some(Placement { pose, mesh: world, aabb });
    }
    None
}

/// Tight ground rectangle around the targets; a unit square centred on the
/// origin when there are none.
pub fn compute_objects_area(targets: &[Aabb]) -> ObjectsArea {
    let rect = if targets.is_empty() {
        Rect2::centered(0.0, 0.0, 1.0)
    } else {
        let mut r = Rect2::new([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for a in targets {
            r.min[0] = r.min[0].min(a.min.x);
            r.min[1] = r.min[1].min(a.min.y);
            r.max[0] = r.max[0].max(a.max.x);
            r.max[1] = r.max[1].max(a.max.y);
        }
        r
    };
    let c = rect.center();
    ObjectsArea {
        rect,
        center: Vec3::new(c[0], c[1], 0.0),
    }
}

/// `[r_min, r_max]` for an objects area: the radius at which the whole
/// area diagonal fits the narrowest field of view, times the configured factors.
pub fn camera_radius_bounds(area: &ObjectsArea, config: &CameraConfig) -> (f64, f64) {
    let fov_min = field_of_view(config.sensor_width_mm, config.focal_length_mm[1]);
    let coverage = (area.rect.diagonal() / 2.0) / (fov_min / 2.0).tan();
    (config.radius_factor[0] * coverage, config.radius_factor[1] * coverage)
}

pub fn sample_camera<R: Rng + ?Sized>(
    area: &ObjectsArea,
    config: &CameraConfig,
    width: u32,
    height: u32,
    rng: &mut R,
) -> CameraSpec {
    let (r_min, r_max) = camera_radius_bounds(area, config);
    let r = uniform(rng, r_min, r_max);
    let theta = uniform(rng, config.theta_deg[0].to_radians(), config.theta_deg[1].to_radians());
    let mut phi = uniform(rng, config.phi_deg[0].to_radians(), config.phi_deg[1].to_radians());
    if phi >= TAU {
        phi -= TAU;
    }
    let d = area.rect.diagonal();
    let shift = Vec3::new(
        uniform(rng, -config.focus_shift[0], config.focus_shift[0]) * d,
        uniform(rng, -config.focus_shift[1], config.focus_shift[1]) * d,
        uniform(rng, -config.focus_shift[2], config.focus_shift[2]) * d,
    );
    let focal = uniform(rng, config.focal_length_mm[0], config.focal_length_mm[1]);
    CameraSpec::new(
        area.center,
        r,
        theta,
        phi,
        area.center + shift,
        focal,
        config.sensor_width_mm,
        width,
        height,
    )
}

pub fn build_scene_box(area: &ObjectsArea, r_max: f64, margin: f64) -> SceneBox {
    let side = area.rect.diagonal().max(2.0 * r_max) * margin;
    SceneBox {
        center: area.center,
        side,
        wall_height: side / 2.0,
    }
}

pub fn light_count(ground_area: f64, config: &LightConfig) -> usize {
    let n = (ground_area / config.reference_area_m2).ceil();
    (n.max(1.0) as usize).min(config.max_count.max(1))
}

pub fn sample_lights<R: Rng + ?Sized>(scene: &SceneBox, config: &LightConfig, rng: &mut R) -> Vec<AreaLight> {
    let area = scene.ground_area();
    let count = light_count(area, config);
    let power_scale = area / config.reference_area_m2;
    let ground = scene.ground();
    (0..count)
        .map(|_| {
            let x = uniform(rng, ground.min[0], ground.max[0]);
            let y = uniform(rng, ground.min[1], ground.max[1]);
            let z = uniform(rng, config.height_fraction[0], config.height_fraction[1]) * scene.wall_height;
            let tilt = uniform(rng, 0.0, config.max_tilt_deg.to_radians());
            let azimuth = uniform(rng, 0.0, TAU);
            let normal = Vec3::new(tilt.sin() * azimuth.cos(), tilt.sin() * azimuth.sin(), -tilt.cos());
            let half = [
                uniform(rng, config.size_fraction[0], config.size_fraction[1]) * scene.side,
                uniform(rng, config.size_fraction[0], config.size_fraction[1]) * scene.side,
            ];
            let power = uniform(rng, config.power_w[0], config.power_w[1]) * power_scale;
            let color = Vec3::new(
                uniform(rng, config.min_channel, 1.0),
                uniform(rng, config.min_channel, 1.0),
                uniform(rng, config.min_channel, 1.0),
            );
            AreaLight {
                center: Vec3::new(x, y, z),
                half_extents: half,
                normal,
                power,
                color,
            }
        })
        .collect()
}

pub struct DistractorDraw {
    pub placements: Vec<(PrimitiveShape, Placement)>,
    pub failures: usize,
}

/// Floating primitive shapes inside the box whose bounds avoid every target.
pub fn sample_distractors<R: Rng + ?Sized>(
    scene: &SceneBox,
    targets: &[Aabb],
    config: &DistractorConfig,
    rng: &mut R,
) -> DistractorDraw {
    let count = rng.random_range(0..=config.max_count);
    let reference = if targets.is_empty() {
        config.fallback_size_m
    } else {
        targets.iter().map(Aabb::diagonal).sum::<f64>() / targets.len() as f64
    };
    let bounds = scene.bounds();
    let mut placements = Vec::new();
    let mut failures = 0;
    for _ in 0..count {
        let shape = PrimitiveShape::ALL[rng.random_range(0..PrimitiveShape::ALL.len())];
        let base = shape.mesh();
        let size = uniform(rng, config.scale_range[0], config.scale_range[1]) * reference;
        let scale = size / mesh_aabb(&base).map(|a| a.diagonal()).unwrap_or(1.0);
        let rotation = [uniform(rng, -PI, PI), uniform(rng, -PI, PI), uniform(rng, -PI, PI)];
        let Ok(shaped_pose) = Pose::new(Vec3::ZERO, rotation, scale) else {
            failures += 1;
            continue;
        };
        let shaped = transform_mesh(&base, &shaped_pose);
        let Ok(local) = mesh_aabb(&shaped) else {
            failures += 1;
            continue;
        };
        let ext = local.extent();
        let mut placed = None;
        for _ in 0..config.max_attempts {
            let mut lo = [0.0; 3];
            for (axis, slot) in lo.iter_mut().enumerate() {
                let (b0, b1, e) = (bounds.min[axis], bounds.max[axis], ext[axis]);
                *slot = if b1 - b0 > e { uniform(rng, b0, b1 - e) } else { b0 };
            }
            let translation = Vec3::from_array(lo) - local.min;
            let candidate = local.translated(translation);
            if targets.iter().any(|t| t.overlaps(&candidate)) {
                continue;
            }
            let Ok(pose) = Pose::new(translation, rotation, scale) else {
                break;
            };
            let world = transform_mesh(&base, &pose);
            let Ok(aabb) = mesh_aabb(&world) else { break };
            if targets.iter().any(|t| t.overlaps(&aabb)) || aabb.min.z < 0.0 {
                continue;
            }
            placed = Some(Placement { pose, mesh: world, aabb });
            break;
        }
        match placed {
            Some(p) => placements.push((shape, p)),
            None => failures += 1,
        }
    }
    DistractorDraw { placements, failures }
}

/// Fails fast when a texture mode with nonzero probability has no assets.
pub fn check_assets(policy: &TexturePolicy, assets: &Assets) -> Result<(), SamplerError> {
    if policy.image > 0.0 && assets.object_images.is_empty() {
        return Err(SamplerError::Config(
            "image texture mode requested but the object image directory is empty".into(),
        ));
    }
    if policy.pbr > 0.0 && assets.materials.is_empty() {
        return Err(SamplerError::Config(
            "pbr texture mode requested but the material library is empty".into(),
        ));
    }
    if policy.pbr_metal > 0.0 && assets.metal_indices().is_empty() {
        return Err(SamplerError::Config(
            "pbr_metal texture mode requested but the library has no metallic material".into(),
        ));
    }
    Ok(())
}

pub fn sample_texture<R: Rng + ?Sized>(
    policy: &TexturePolicy,
    assets: &Assets,
    rng: &mut R,
) -> Result<MaterialSpec, SamplerError> {
    let u = rng.random::<f64>() * policy.total();
    let pick = |rng: &mut R, n: usize, what: &str| -> Result<usize, SamplerError> {
        if n == 0 {
            Err(SamplerError::Config(format!("no assets for {what} texture mode")))
        } else {
            Ok(rng.random_range(0..n))
        }
    };
    let pbr = |rng: &mut R, index: usize| -> MaterialSpec {
        let mut m = assets.materials[index].clone();
        if policy.pbr_jitter > 0.0 {
            let j = policy.pbr_jitter;
            m.metalness = (m.metalness + uniform(rng, -j, j)).clamp(0.0, 1.0);
            m.roughness = (m.roughness + uniform(rng, -j, j)).clamp(MIN_ROUGHNESS, 1.0);
        }
        MaterialSpec::Pbr(m)
    };
    if u < policy.solid {
        let color = Vec3::new(rng.random(), rng.random(), rng.random());
        Ok(MaterialSpec::Solid { color })
    } else if u < policy.solid + policy.image {
        let i = pick(rng, assets.object_images.len(), "image")?;
        Ok(MaterialSpec::Image {
            texture: assets.object_images.get(i)?,
            source: assets.object_images.path(i).to_path_buf(),
            tiling: policy.tiling_m,
        })
    } else if u < policy.solid + policy.image + policy.pbr || policy.pbr_metal == 0.0 {
        let i = pick(rng, assets.materials.len(), "pbr")?;
        Ok(pbr(rng, i))
    } else {
        let metals = assets.metal_indices();
        let i = pick(rng, metals.len(), "pbr_metal")?;
        Ok(pbr(rng, metals[i]))
    }
}

/// Background image stretched once across the ground, or a random matte
/// colour when no background directory is configured.
pub fn sample_background<R: Rng + ?Sized>(
    assets: &Assets,
    scene: &SceneBox,
    rng: &mut R,
) -> Result<MaterialSpec, SamplerError> {
    if assets.backgrounds.is_empty() {
        let color = Vec3::new(uniform(rng, 0.1, 0.9), uniform(rng, 0.1, 0.9), uniform(rng, 0.1, 0.9));
        return Ok(MaterialSpec::Solid { color });
    }
    let i = rng.random_range(0..assets.backgrounds.len());
    Ok(MaterialSpec::Image {
        texture: assets.backgrounds.get(i)?,
        source: assets.backgrounds.path(i).to_path_buf(),
        tiling: scene.side,
    })
}

/// Draws one complete scene.
pub fn sample_scene<R: Rng + ?Sized>(
    catalog: &ObjectCatalog,
    assets: &Assets,
    config: &SamplerConfig,
    width: u32,
    height: u32,
    rng: &mut R,
) -> Result<SceneLayout, SamplerError> {
    let set = sample_object_set(catalog.len(), config.objects.max_count, rng);
    let mean_diag = if set.is_empty() {
        0.0
    } else {
        set.iter()
            .map(|&c| mesh_aabb(&catalog.categories[c].mesh).map(|a| a.diagonal()).unwrap_or(0.0))
            .sum::<f64>()
            / set.len() as f64
    };
    let side = config.objects.placement_spread * (set.len().max(1) as f64).sqrt() * mean_diag;
    let region = Rect2::centered(0.0, 0.0, side.max(1e-6));
    let limits = config.objects.rotation_limits_deg.map(f64::to_radians);

    let mut targets: Vec<ObjectInstance> = Vec::with_capacity(set.len());
    let mut placed: Vec<Aabb> = Vec::with_capacity(set.len());
    let mut placement_failures = 0;
    for &category in &set {
        let mesh = &catalog.categories[category].mesh;
        match sample_pose(mesh, &placed, region, limits, rng, config.objects.max_attempts) {
            Some(p) => {
                let material = sample_texture(&config.textures, assets, rng)?;
                placed.push(p.aabb);
                targets.push(ObjectInstance {
                    id: targets.len() as u32 + 1,
                    kind: ObjectKind::Target,
                    source: ObjectSource::Category(category),
                    pose: p.pose,
                    material,
                    mesh: Arc::new(p.mesh),
                    aabb: p.aabb,
                });
            }
            None => {
                log::debug!("dropping object of category {category}: no free placement");
                placement_failures += 1;
            }
        }
    }

    let objects_area = compute_objects_area(&placed);
    let camera = sample_camera(&objects_area, &config.camera, width, height, rng);
    let (_, r_max) = camera_radius_bounds(&objects_area, &config.camera);
    let scene_box = build_scene_box(&objects_area, r_max, config.scene.margin);
    let lights = sample_lights(&scene_box, &config.lights, rng);

    let draw = sample_distractors(&scene_box, &placed, &config.distractors, rng);
    let mut distractors = Vec::with_capacity(draw.placements.len());
    for (shape, p) in draw.placements {
        let material = sample_texture(&config.textures, assets, rng)?;
        distractors.push(ObjectInstance {
            id: (targets.len() + distractors.len()) as u32 + 1,
            kind: ObjectKind::Distractor,
            source: ObjectSource::Primitive(shape),
            pose: p.pose,
            material,
            mesh: Arc::new(p.mesh),
            aabb: p.aabb,
        });
    }
    let background = sample_background(assets, &scene_box, rng)?;

    Ok(SceneLayout {
        targets,
        distractors,
        objects_area,
        scene_box,
        camera,
        lights,
        background,
        placement_failures,
        distractor_failures: draw.failures,
    })
}

#[cfg(test)]
mod tests;
