//! Surface appearance: the three texture modes and the reflectance model.

mod brdf;
mod library;
mod texture;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{Color, Vec3};

pub use brdf::{
    brdf_pdf, evaluate_brdf, evaluate_lobes, sample_brdf, sample_cosine_hemisphere, BrdfLobes,
    BrdfSample, SurfacePoint, MIN_ROUGHNESS,
};
pub use library::{load_material_library, parse_descriptor, LibraryLoad, MaterialDescriptor};
pub use texture::{linear_to_srgb, srgb_to_linear, triplanar_lookup, TextureImage};

/// Roughness of plain-colour objects.
pub const SOLID_ROUGHNESS: f64 = 0.5;
/// Image textures carry no reflectance parameters; they shade as matte dielectrics.
pub const IMAGE_ROUGHNESS: f64 = 0.6;
/// World size (m) of one texture repeat.
pub const DEFAULT_TILING: f64 = 0.2;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },
    #[error("invalid texture: {0}")]
    InvalidTexture(String),
    #[error("material {name}: {message}")]
    Invalid { name: String, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Albedo {
    Constant(Color),
    Map(Arc<TextureImage>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbrMaterial {
    pub name: String,
    pub albedo: Albedo,
    pub metalness: f64,
    pub roughness: f64,
    pub tiling: f64,
}

impl PbrMaterial {
    pub fn is_metal(&self) -> bool {
        self.metalness >= 0.5
    }
}

/// Exactly one texture mode with its payload.
#[derive(Debug, Clone, PartialEq)]
pub enum MaterialSpec {
    Solid {
        color: Color,
    },
    Image {
        texture: Arc<TextureImage>,
        source: PathBuf,
        tiling: f64,
    },
    Pbr(PbrMaterial),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TextureMode {
    Solid,
    Image,
    Pbr,
}

impl MaterialSpec {
    pub fn mode(&self) -> TextureMode {
        match self {
            MaterialSpec::Solid { .. } => TextureMode::Solid,
            MaterialSpec::Image { .. } => TextureMode::Image,
            MaterialSpec::Pbr(_) => TextureMode::Pbr,
        }
    }

    /// Material parameters at a world-space point with unit normal.
    pub fn resolve(&self, point: Vec3, normal: Vec3) -> SurfacePoint {
        match self {
            MaterialSpec::Solid { color } => SurfacePoint::new(*color, 0.0, SOLID_ROUGHNESS),
            MaterialSpec::Image {
                texture, tiling, ..
            } => SurfacePoint::new(
                triplanar_lookup(texture, point, normal, *tiling),
                0.0,
                IMAGE_ROUGHNESS,
            ),
            MaterialSpec::Pbr(m) => {
                let albedo = match &m.albedo {
                    Albedo::Constant(c) => *c,
                    Albedo::Map(t) => triplanar_lookup(t, point, normal, m.tiling),
                };
                SurfacePoint::new(albedo, m.metalness, m.roughness)
            }
        }
    }

    pub fn summary(&self) -> MaterialSummary {
        match self {
            MaterialSpec::Solid { color } => MaterialSummary {
                mode: TextureMode::Solid,
                color: Some(color.to_array()),
                source: None,
                metalness: 0.0,
                roughness: SOLID_ROUGHNESS,
            },
            MaterialSpec::Image { source, .. } => MaterialSummary {
                mode: TextureMode::Image,
                color: None,
                source: Some(file_name(source)),
                metalness: 0.0,
                roughness: IMAGE_ROUGHNESS,
            },
            MaterialSpec::Pbr(m) => MaterialSummary {
                mode: TextureMode::Pbr,
                color: match m.albedo {
                    Albedo::Constant(c) => Some(c.to_array()),
                    Albedo::Map(_) => None,
                },
                source: Some(m.name.clone()),
                metalness: m.metalness,
                roughness: m.roughness,
            },
        }
    }
}

fn file_name(p: &std::path::Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// What the manifest records about a material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSummary {
    pub mode: TextureMode,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub color: Option<[f64; 3]>,
    /// Image file name or PBR material name.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source: Option<String>,
    pub metalness: f64,
    pub roughness: f64,
}
