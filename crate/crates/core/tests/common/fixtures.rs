//! Small meshes and configs written into a scratch directory.

use std::fs;
use std::path::Path;

use partgen::dataset::GenerationConfig;
use partgen::render::Backend;
use partgen::sampler::{CatalogConfig, CategoryConfig, TexturePolicy};

pub const CUBE: &str = "v 0 0 0\nv 0.2 0 0\nv 0.2 0.2 0\nv 0 0.2 0\nv 0 0 0.2\nv 0.2 0 0.2\nv 0.2 0.2 0.2\nv 0 0.2 0.2\n\
f 1 3 2\nf 1 4 3\nf 5 6 7\nf 5 7 8\nf 1 2 6\nf 1 6 5\nf 2 3 7\nf 2 7 6\nf 3 4 8\nf 3 8 7\nf 4 1 5\nf 4 5 8\n";
pub const WEDGE: &str = "v 0 0 0\nv 0.3 0 0\nv 0 0.2 0\nv 0 0 0.15\nf 1 3 2\nf 1 2 4\nf 2 3 4\nf 3 1 4\n";

/// Tessellated cylinder of radius `r` and height `h`, about 4n triangles.
pub fn cylinder_obj(r: f64, h: f64, n: usize) -> String {
    let mut s = String::new();
    for z in [0.0, h] {
        for i in 0..n {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            s += &format!("v {} {} {z}\n", r * a.cos(), r * a.sin());
        }
    }
    s += &format!("v 0 0 0\nv 0 0 {h}\n");
    let (bc, tc) = (2 * n + 1, 2 * n + 2);
    for i in 0..n {
        let (a, b) = (i + 1, (i + 1) % n + 1);
        let (c, d) = (a + n, b + n);
        s += &format!("f {a} {b} {d}\nf {a} {d} {c}\nf {bc} {b} {a}\nf {tc} {c} {d}\n");
    }
    s
}

pub fn write_meshes(dir: &Path) -> CatalogConfig {
    fs::write(dir.join("cube.obj"), CUBE).unwrap();
    fs::write(dir.join("wedge.obj"), WEDGE).unwrap();
    fs::write(dir.join("cylinder.obj"), cylinder_obj(0.08, 0.25, 24)).unwrap();
    let cat = |name: &str, mesh: &str| CategoryConfig {
        name: name.into(),
        mesh: mesh.into(),
        scale: 1.0,
    };
    CatalogConfig {
        categories: vec![cat("cube", "cube.obj"), cat("wedge", "wedge.obj"), cat("cylinder", "cylinder.obj")],
        ..CatalogConfig::default()
    }
}

/// Solid textures, rasterized, small images.
pub fn small_config(dir: &Path, out: &str, count: usize, side: u32) -> GenerationConfig {
    let mut c = GenerationConfig::new(write_meshes(dir), out);
    c.base_dir = dir.to_path_buf();
    c.image_count = count;
    c.width = side;
    c.height = side;
    c.render.backend = Backend::Rasterized;
    c.sampler.textures = TexturePolicy::only("solid");
    c.seed = 2024;
    c
}
