use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use partgen::render::{render_id_pass, render_pathtraced, render_rasterized, Backend, RenderSettings};
use partgen_bench::{layout, scene};

fn renderers(c: &mut Criterion) {
    let l = layout(7, 10, 128);
    let s = scene(&l);
    let mut g = c.benchmark_group("render_128");
    g.sample_size(10);
    let pt = RenderSettings {
        samples_per_pixel: 8,
        ..RenderSettings::default()
    };
    g.bench_function("path_traced_8spp", |b| b.iter(|| render_pathtraced(black_box(&s), &l.camera, &pt)));
    let ra = RenderSettings {
        backend: Backend::Rasterized,
        ..RenderSettings::default()
    };
    g.bench_function("rasterized", |b| b.iter(|| render_rasterized(black_box(&s), &l.camera, &ra)));
    g.bench_function("id_pass", |b| b.iter(|| render_id_pass(black_box(&s), &l.camera)));
    g.finish();

    // Up to 20 targets from a catalog with a 9.6k-triangle part.
    let cat = partgen_bench::dense_catalog();
    let l = (0..40).map(|i| partgen_bench::layout_from(&cat, i, 20, 256)).max_by_key(|l| l.targets.len()).unwrap();
    let s = scene(&l);
    let mut g = c.benchmark_group("render_dense_256");
    g.sample_size(10);
    let pt = RenderSettings {
        samples_per_pixel: 4,
        ..RenderSettings::default()
    };
    g.bench_function("path_traced_4spp", |b| b.iter(|| render_pathtraced(black_box(&s), &l.camera, &pt)));
    g.finish();
}

fn bvh(c: &mut Criterion) {
    let l = layout(3, 20, 64);
    let meshes: Vec<_> = l.objects().map(|o| o.mesh.clone()).collect();
    c.bench_function("bvh_build_20_objects", |b| {
        b.iter(|| partgen::geometry::Bvh::build(black_box(&meshes)).unwrap())
    });
}

criterion_group!(benches, renderers, bvh);
criterion_main!(benches);
