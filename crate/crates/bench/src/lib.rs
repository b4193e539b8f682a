//! Scene fixtures shared by the benchmarks.

use partgen::geometry::primitives::{cylinder, icosphere, torus, uv_sphere};
use partgen::geometry::TriangleMesh;
use partgen::render::RenderScene;
use partgen::sampler::{sample_scene, Assets, ObjectCatalog, SamplerConfig, SceneLayout, TexturePolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scaled(m: TriangleMesh, s: f64) -> TriangleMesh {
    let pose = partgen::geometry::Pose::new(partgen::math::Vec3::ZERO, [0.0; 3], s).expect("valid pose");
    partgen::geometry::transform_mesh(&m, &pose)
}

/// Three smooth categories at roughly 10 cm scale.
pub fn catalog() -> ObjectCatalog {
    ObjectCatalog::from_meshes(vec![
        ("ball".into(), scaled(icosphere(3), 0.06)),
        ("ring".into(), scaled(torus(1.0, 0.3, 48, 16), 0.06)),
        ("knob".into(), scaled(uv_sphere(24, 48), 0.05)),
    ])
}

/// Like [`catalog`] plus a 9.6k-triangle cylinder, so 20 objects approach 200k triangles.
pub fn dense_catalog() -> ObjectCatalog {
    let mut named = vec![("cylinder".to_string(), scaled(cylinder(2400), 0.15))];
    named.extend(catalog().categories.into_iter().map(|c| (c.name, (*c.mesh).clone())));
    ObjectCatalog::from_meshes(named)
}

/// A sampled scene with up to `max_objects` targets and solid textures.
pub fn layout(seed: u64, max_objects: usize, side: u32) -> SceneLayout {
    layout_from(&catalog(), seed, max_objects, side)
}

pub fn layout_from(catalog: &ObjectCatalog, seed: u64, max_objects: usize, side: u32) -> SceneLayout {
    let mut cfg = SamplerConfig::default();
    cfg.objects.max_count = max_objects;
    cfg.textures = TexturePolicy::only("solid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_scene(catalog, &Assets::default(), &cfg, side, side, &mut rng).expect("scene samples")
}

pub fn scene(layout: &SceneLayout) -> RenderScene {
    RenderScene::from_layout(layout).expect("valid scene")
}
