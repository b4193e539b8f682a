use super::*;
use crate::geometry::primitives::{centered_cube, unit_cube};
use crate::material::{Albedo, PbrMaterial};
use proptest::prelude::*;
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every uniform draw lands on the midpoint of its range.
struct MidRng;

impl RngCore for MidRng {
    fn next_u32(&mut self) -> u32 {
        1 << 31
    }
    fn next_u64(&mut self) -> u64 {
        1 << 63
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        dst.fill(0x80);
    }
}

fn cube_aabb_at(x: f64, y: f64) -> Aabb {
    Aabb::new(Vec3::new(x, y, 0.0), Vec3::new(x + 1.0, y + 1.0, 1.0))
}

fn multiplicities(set: &[usize], k: usize) -> Vec<usize> {
    let mut m = vec![0; k];
    for &c in set {
        m[c] += 1;
    }
    m
}

#[test]
fn object_set_empty_when_max_zero() {
    for s in 0..20 {
        assert!(sample_object_set(4, 0, &mut rng(s)).is_empty());
    }
}

#[test]
fn object_set_even_split() {
    let set = assign_categories(5, 5, &mut rng(3));
    assert_eq!(multiplicities(&set, 5), vec![1; 5]);
    let mut m = multiplicities(&assign_categories(3, 7, &mut rng(9)), 3);
    m.sort();
    assert_eq!(m, vec![2, 2, 3]);
}

#[test]
fn object_set_count_covers_zero_to_max() {
    let mut seen = [false; 4];
    let mut r = rng(1);
    for _ in 0..200 {
        seen[sample_object_set(2, 3, &mut r).len()] = true;
    }
    assert!(seen.iter().all(|&s| s));
}

#[test]
fn first_pose_always_accepted() {
    let region = Rect2::centered(0.0, 0.0, 4.0);
    for s in 0..20 {
        let p = sample_pose(&unit_cube(), &[], region, [PI; 3], &mut rng(s), 100).expect("placed");
        assert!(p.aabb.min.z.abs() < 1e-9);
    }
}

#[test]
fn full_region_rejects_second_object() {
    let region = Rect2::new([0.0, 0.0], [1.0, 1.0]);
    let mut r = rng(5);
    let first = sample_pose(&unit_cube(), &[], region, [0.0; 3], &mut r, 100).unwrap();
    assert!(sample_pose(&unit_cube(), &[first.aabb], region, [0.0; 3], &mut r, 100).is_none());
}

#[test]
fn five_cubes_disjoint() {
    let region = Rect2::centered(0.0, 0.0, 10.0);
    let mut r = rng(11);
    let mut placed = Vec::new();
    for _ in 0..5 {
        let p = sample_pose(&unit_cube(), &placed, region, [PI; 3], &mut r, 100).unwrap();
        placed.push(p.aabb);
    }
    for i in 0..5 {
        for j in i + 1..5 {
            assert!(!placed[i].footprint_overlaps(&placed[j]));
        }
    }
}

#[test]
fn rotation_respects_limits() {
    let lim = 30f64.to_radians();
    let region = Rect2::centered(0.0, 0.0, 10.0);
    let mut r = rng(2);
    for _ in 0..500 {
        let p = sample_pose(&unit_cube(), &[], region, [lim, lim, PI], &mut r, 10).unwrap();
        assert!(p.pose.rotation[0].abs() <= lim && p.pose.rotation[1].abs() <= lim);
    }
}

#[test]
fn objects_area_examples() {
    let a = compute_objects_area(&[cube_aabb_at(0.0, 0.0)]);
    assert_eq!(a.rect, Rect2::new([0.0, 0.0], [1.0, 1.0]));
    assert_eq!(a.center, Vec3::new(0.5, 0.5, 0.0));
    let b = compute_objects_area(&[cube_aabb_at(0.0, 0.0), cube_aabb_at(4.0, 0.0)]);
    assert_eq!(b.rect, Rect2::new([0.0, 0.0], [5.0, 1.0]));
    assert_eq!(b.center, Vec3::new(2.5, 0.5, 0.0));
    let e = compute_objects_area(&[]);
    assert_eq!((e.rect.width(), e.rect.height()), (1.0, 1.0));
    assert_eq!(e.center, Vec3::ZERO);
}

#[test]
fn spherical_offset_examples() {
    let pole = spherical_offset(2.0, 0.0, 1.234);
    assert!((pole - Vec3::new(0.0, 0.0, 2.0)).length() < 1e-15);
    let eq = spherical_offset(1.0, PI / 2.0, 0.0);
    assert!((eq - Vec3::new(1.0, 0.0, 0.0)).length() < 1e-15);
    // sin(π/3) = √3/2 and cos(π/4) = sin(π/4) = √2/2, so x = y = √6/2.
    let o = spherical_offset(2.0, PI / 3.0, PI / 4.0);
    let h = 6f64.sqrt() / 2.0;
    assert!((o - Vec3::new(h, h, 1.0)).length() < 1e-4);
    assert!((o.x - 1.2247).abs() < 1e-4);
}

#[test]
fn camera_fov_formula() {
    let c = sample_camera(&compute_objects_area(&[]), &CameraConfig::default(), 64, 64, &mut rng(4));
    assert!((c.fov - 2.0 * (36.0 / (2.0 * c.focal_length_mm)).atan()).abs() < 1e-12);
    // 36 mm sensor at 18 mm gives a 90° field of view.
    assert!((field_of_view(36.0, 18.0) - PI / 2.0).abs() < 1e-12);
}

#[test]
fn camera_radius_covers_area_at_min_factor_one() {
    let area = compute_objects_area(&[cube_aabb_at(0.0, 0.0), cube_aabb_at(3.0, 2.0)]);
    let cfg = CameraConfig {
        radius_factor: [1.0, 1.0],
        ..CameraConfig::default()
    };
    let (r, _) = camera_radius_bounds(&area, &cfg);
    let fov = field_of_view(36.0, 60.0);
    assert!(((area.rect.diagonal() / 2.0) / r - (fov / 2.0).tan()).abs() < 1e-12);
}

#[test]
fn scene_box_examples() {
    let area = ObjectsArea {
        rect: Rect2::new([0.0, 0.0], [0.6, 0.8]),
        center: Vec3::new(0.3, 0.4, 0.0),
    };
    let b = build_scene_box(&area, 3.0, 1.25);
    assert!((b.side - 7.5).abs() < 1e-12 && (b.wall_height - 3.75).abs() < 1e-12);
    let tight = build_scene_box(&area, 3.0, 1.0);
    let cam = area.center + spherical_offset(3.0, PI / 2.0 - 1e-9, 0.0);
    assert!(cam.x - area.center.x <= tight.side / 2.0);
    let empty = build_scene_box(&compute_objects_area(&[]), 1e-3, 1.25);
    assert!(empty.side > 0.0);
}

#[test]
fn light_count_examples() {
    let cfg = LightConfig::default();
    assert_eq!(light_count(10.0, &cfg), 1);
    assert_eq!(light_count(200.0, &cfg), 6);
    assert_eq!(light_count(60.0, &cfg), 3);
}

#[test]
fn midpoint_light_at_box_center() {
    let b = SceneBox {
        center: Vec3::new(1.0, -2.0, 0.0),
        side: 4.0,
        wall_height: 2.0,
    };
    let lights = sample_lights(&b, &LightConfig::default(), &mut MidRng);
    assert_eq!(lights.len(), 1);
    let l = lights[0];
    assert!((l.center - Vec3::new(1.0, -2.0, 1.5)).length() < 1e-12);
    assert!(l.normal.z < 0.0 && l.power > 0.0);
}

#[test]
fn lights_within_ranges() {
    let b = SceneBox {
        center: Vec3::ZERO,
        side: 12.0,
        wall_height: 6.0,
    };
    let cfg = LightConfig::default();
    let mut r = rng(8);
    for _ in 0..300 {
        for l in sample_lights(&b, &cfg, &mut r) {
            assert!(l.normal.z <= -(30f64.to_radians().cos()) + 1e-12);
            assert!((l.normal.length() - 1.0).abs() < 1e-12);
            assert!(l.center.z >= 3.0 && l.center.z <= 6.0);
            let scale = 144.0 / 25.0;
            assert!(l.power >= 50.0 * scale && l.power <= 500.0 * scale);
            assert!(l.color.min_component() >= 0.25 && l.color.max_component() <= 1.0);
            assert!(l.half_extents.iter().all(|&h| h > 0.0));
        }
    }
}

#[test]
fn no_distractors_when_max_zero() {
    let b = build_scene_box(&compute_objects_area(&[]), 2.0, 1.25);
    let cfg = DistractorConfig {
        max_count: 0,
        ..DistractorConfig::default()
    };
    assert!(sample_distractors(&b, &[], &cfg, &mut rng(1)).placements.is_empty());
}

#[test]
fn distractors_avoid_targets() {
    let target = Aabb::new(Vec3::new(-0.5, -0.5, 0.0), Vec3::new(0.5, 0.5, 1.0));
    let area = compute_objects_area(&[target]);
    let b = build_scene_box(&area, 1.5, 1.25);
    let mut r = rng(21);
    let mut n = 0;
    for _ in 0..100 {
        for (_, p) in sample_distractors(&b, &[target], &DistractorConfig::default(), &mut r).placements {
            assert!(!p.aabb.overlaps(&target));
            assert!(p.aabb.min.z >= 0.0);
            n += 1;
        }
    }
    assert!(n > 100);
}

#[test]
fn distractor_scale_uses_fallback_without_targets() {
    let b = build_scene_box(&compute_objects_area(&[]), 2.0, 1.25);
    let mut r = rng(6);
    for _ in 0..50 {
        for (shape, p) in sample_distractors(&b, &[], &DistractorConfig::default(), &mut r).placements {
            let base = mesh_aabb(&shape.mesh()).unwrap().diagonal();
            let size = p.pose.scale * base;
            assert!((0.3 * 0.2 - 1e-12..=1.5 * 0.2 + 1e-12).contains(&size), "{size}");
        }
    }
}

fn metal(name: &str, metalness: f64) -> PbrMaterial {
    PbrMaterial {
        name: name.into(),
        albedo: Albedo::Constant(Vec3::splat(0.8)),
        metalness,
        roughness: 0.3,
        tiling: 0.2,
    }
}

#[test]
fn solid_policy_always_solid() {
    let assets = Assets::default();
    let mut r = rng(0);
    for _ in 0..100 {
        let m = sample_texture(&TexturePolicy::only("solid"), &assets, &mut r).unwrap();
        let MaterialSpec::Solid { color } = m else { panic!("not solid") };
        assert!(color.min_component() >= 0.0 && color.max_component() <= 1.0);
    }
}

#[test]
fn metal_sets_chosen_evenly() {
    let assets = Assets {
        materials: vec![metal("a", 1.0), metal("b", 0.9), metal("plastic", 0.0), metal("c", 1.0)],
        ..Assets::default()
    };
    let policy = TexturePolicy::only("pbr_metal");
    let mut counts = std::collections::HashMap::new();
    let mut r = rng(77);
    for _ in 0..3000 {
        let MaterialSpec::Pbr(m) = sample_texture(&policy, &assets, &mut r).unwrap() else { panic!() };
        *counts.entry(m.name).or_insert(0usize) += 1;
    }
    assert!(!counts.contains_key("plastic"));
    // Binomial(3000, 1/3): σ ≈ 25.8.
    let sigma = (3000.0f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
    for name in ["a", "b", "c"] {
        let c = counts[name] as f64;
        assert!((c - 1000.0).abs() <= 3.0 * sigma, "{name}: {c}");
    }
    // Chi-square with 2 degrees of freedom, 99.9% quantile 13.8.
    let chi2: f64 = counts.values().map(|&c| (c as f64 - 1000.0).powi(2) / 1000.0).sum();
    assert!(chi2 < 13.8, "{chi2}");
}

#[test]
fn image_mode_without_images_fails_fast() {
    let assets = Assets::default();
    assert!(check_assets(&TexturePolicy::only("image"), &assets).is_err());
    assert!(check_assets(&TexturePolicy::only("pbr"), &assets).is_err());
    assert!(check_assets(&TexturePolicy::only("solid"), &assets).is_ok());
}

#[test]
fn default_config_is_valid() {
    assert!(SamplerConfig::default().validate().is_empty());
    let mut bad = SamplerConfig::default();
    bad.scene.margin = 0.9;
    bad.camera.theta_deg = [0.0, 100.0];
    assert_eq!(bad.validate().len(), 3);
}

fn test_catalog() -> ObjectCatalog {
    ObjectCatalog::from_meshes(vec![
        ("cube".into(), unit_cube()),
        ("bar".into(), transform_mesh(&centered_cube(), &Pose::new(Vec3::ZERO, [0.0; 3], 0.4).unwrap())),
        ("torus".into(), PrimitiveShape::Torus.mesh()),
    ])
}

fn solid_config() -> SamplerConfig {
    SamplerConfig {
        textures: TexturePolicy::only("solid"),
        ..SamplerConfig::default()
    }
}

#[test]
fn same_seed_same_scene() {
    let cat = test_catalog();
    let assets = Assets::default();
    let a = sample_scene(&cat, &assets, &solid_config(), 64, 64, &mut rng(99)).unwrap();
    let b = sample_scene(&cat, &assets, &solid_config(), 64, 64, &mut rng(99)).unwrap();
    assert_eq!(a.camera, b.camera);
    assert_eq!(a.lights, b.lights);
    assert_eq!(a.targets.len(), b.targets.len());
    for (x, y) in a.objects().zip(b.objects()) {
        assert_eq!(x.pose, y.pose);
        assert_eq!(x.material, y.material);
        assert_eq!(*x.mesh, *y.mesh);
    }
}

fn check_scene(s: &SceneLayout) {
    let n = s.targets.len();
    for (i, t) in s.objects().enumerate() {
        assert_eq!(t.id as usize, i + 1);
    }
    for (i, a) in s.targets.iter().enumerate() {
        let zmin = a.mesh.vertices().iter().map(|v| v.z).fold(f64::INFINITY, f64::min);
        assert!(zmin.abs() < 1e-9, "target {i} min z {zmin}");
        for b in &s.targets[i + 1..] {
            assert!(!a.aabb.footprint_overlaps(&b.aabb));
        }
        let r = &s.objects_area.rect;
        assert!(r.min[0] <= a.aabb.min.x && a.aabb.max.x <= r.max[0]);
        assert!(r.min[1] <= a.aabb.min.y && a.aabb.max.y <= r.max[1]);
    }
    for d in &s.distractors {
        assert!(d.id as usize > n);
        assert!(d.aabb.min.z >= 0.0);
        for t in &s.targets {
            assert!(!d.aabb.overlaps(&t.aabb));
        }
    }
    let ground = s.scene_box.ground();
    assert!(ground.min[0] < s.objects_area.rect.min[0] && s.objects_area.rect.max[0] < ground.max[0]);
    assert!(ground.min[1] < s.objects_area.rect.min[1] && s.objects_area.rect.max[1] < ground.max[1]);
    assert!(s.scene_box.contains_strictly(s.camera.position));
    let off = s.camera.position - s.objects_area.center;
    assert!((off.length() - s.camera.r).abs() < 1e-9);
    assert!(!s.lights.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_category_balance(k in 1usize..8, n in 0usize..40, seed in any::<u64>()) {
        let m = multiplicities(&assign_categories(k, n, &mut rng(seed)), k);
        let (lo, hi) = (m.iter().min().unwrap(), m.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
        prop_assert_eq!(m.iter().sum::<usize>(), n);
    }

    #[test]
    fn prop_camera_ranges(seed in any::<u64>(), w in 0.1f64..20.0, h in 0.1f64..20.0) {
        let area = ObjectsArea { rect: Rect2::new([0.0, 0.0], [w, h]), center: Vec3::new(w / 2.0, h / 2.0, 0.0) };
        let cfg = CameraConfig::default();
        let (r_min, r_max) = camera_radius_bounds(&area, &cfg);
        let mut r = rng(seed);
        for _ in 0..50 {
            let c = sample_camera(&area, &cfg, 32, 32, &mut r);
            prop_assert!(((c.position - area.center).length() - c.r).abs() < 1e-9);
            prop_assert!(c.r >= r_min && c.r <= r_max);
            prop_assert!(c.theta >= 5f64.to_radians() && c.theta <= 85f64.to_radians());
            prop_assert!(c.phi >= 0.0 && c.phi < TAU);
            prop_assert!(c.focal_length_mm >= 30.0 && c.focal_length_mm <= 60.0);
            let d = area.rect.diagonal();
            let s = c.look_at - area.center;
            prop_assert!(s.x.abs() <= 0.1 * d && s.y.abs() <= 0.1 * d && s.z.abs() <= 0.05 * d);
        }
    }

    #[test]
    fn prop_scene_invariants(seed in any::<u64>()) {
        let s = sample_scene(&test_catalog(), &Assets::default(), &solid_config(), 48, 48, &mut rng(seed)).unwrap();
        check_scene(&s);
    }
}

#[test]
fn scene_invariants_with_gdr_limits() {
    let mut cfg = solid_config();
    cfg.objects.rotation_limits_deg = [30.0, 30.0, 180.0];
    cfg.objects.max_count = 15;
    for seed in 0..30 {
        let s = sample_scene(&test_catalog(), &Assets::default(), &cfg, 48, 48, &mut rng(seed)).unwrap();
        check_scene(&s);
        for t in &s.targets {
            assert!(t.pose.rotation[0].abs() <= 30f64.to_radians() + 1e-12);
        }
    }
}
