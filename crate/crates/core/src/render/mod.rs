//! Path-traced and rasterized RGB, plus the instance-id pass behind the labels.

mod camera;
mod pathtrace;
mod raster;
mod scene;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::material::linear_to_srgb;
use crate::math::{Color, Vec3};
use crate::sampler::CameraSpec;

pub use camera::Camera;
pub use pathtrace::{primary_visibility_ids, render_pathtraced};
pub use raster::{rasterize, render_id_pass, render_rasterized, Coverage};
pub use scene::{scene_box_meshes, RenderObject, RenderScene, Surface, SurfaceHit};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid render settings: {0}")]
    InvalidSettings(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    PathTraced,
    Rasterized,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Backend, String> {
        match s {
            "path_traced" | "pathtraced" | "path" => Ok(Backend::PathTraced),
            "rasterized" | "raster" => Ok(Backend::Rasterized),
            other => Err(format!("unknown backend {other:?} (expected path_traced or rasterized)")),
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::PathTraced => "path_traced",
            Backend::Rasterized => "rasterized",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderSettings {
    pub backend: Backend,
    pub samples_per_pixel: u32,
    pub max_depth: u32,
    pub exposure: f64,
    /// Seed of the per-pixel streams. The dataset derives one per image.
    pub seed: u64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            backend: Backend::PathTraced,
            samples_per_pixel: 64,
            max_depth: 6,
            exposure: 1.0,
            seed: 0,
        }
    }
}

impl RenderSettings {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.samples_per_pixel == 0 {
            errs.push("render.samples_per_pixel must be >= 1".to_string());
        }
        if self.max_depth == 0 {
            errs.push("render.max_depth must be >= 1".to_string());
        }
        if !(self.exposure > 0.0 && self.exposure.is_finite()) {
            errs.push("render.exposure must be positive".to_string());
        }
        errs
    }
}

/// Linear HDR radiance, row-major from the top-left pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderBuffer {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<Color>,
    /// Samples or pixels dropped for being non-finite or negative.
    pub clamped: usize,
}

impl RenderBuffer {
    pub fn get(&self, x: u32, y: u32) -> Color {
        self.pixels[(y * self.width + x) as usize]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|p| [p.x, p.y, p.z])
            .flat_map(f64::to_le_bytes)
            .collect()
    }
}

/// Per-pixel instance label; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdBuffer {
    pub width: u32,
    pub height: u32,
    pub ids: Vec<u32>,
}

impl IdBuffer {
    pub fn new(width: u32, height: u32) -> IdBuffer {
        IdBuffer {
            width,
            height,
            ids: vec![0; (width * height) as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.ids[(y * self.width + x) as usize]
    }
}

/// Renders with the backend selected in `settings`.
pub fn render(scene: &RenderScene, camera: &CameraSpec, settings: &RenderSettings) -> RenderBuffer {
    match settings.backend {
        Backend::PathTraced => render_pathtraced(scene, camera, settings),
        Backend::Rasterized => render_rasterized(scene, camera, settings),
    }
}

/// Reinhard per channel after exposure, then the sRGB curve.
#[inline]
pub fn tone_map_value(x: f64, exposure: f64) -> u8 {
    let v = (x * exposure).max(0.0);
    let v = if v.is_finite() { v / (1.0 + v) } else { 1.0 };
    (linear_to_srgb(v) * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn tone_map(hdr: &RenderBuffer, exposure: f64) -> image::RgbImage {
    let mut img = image::RgbImage::new(hdr.width, hdr.height);
    for (px, c) in img.pixels_mut().zip(&hdr.pixels) {
        *px = image::Rgb([
            tone_map_value(c.x, exposure),
            tone_map_value(c.y, exposure),
            tone_map_value(c.z, exposure),
        ]);
    }
    img
}

/// Mean radiance over a buffer region, for tests and diagnostics.
pub fn mean_radiance(buf: &RenderBuffer) -> Color {
    buf.pixels.iter().fold(Vec3::ZERO, |a, &p| a + p) / buf.pixels.len().max(1) as f64
}
