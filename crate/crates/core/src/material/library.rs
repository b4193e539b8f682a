//! PBR material sets on disk.
//!
//! A library directory holds one material per subdirectory (texture maps
//! and/or a `material.txt` descriptor) or per top-level `.txt` descriptor.
//! Map files are recognised by name: `*color*`/`*albedo*`/`*basecolor*`/`*diffuse*`
//! for albedo, `*metal*` for metalness, `*rough*` for roughness.
//!
//! Descriptor format, one `key = value` per line, `#` comments:
//!
//! ```text
//! albedo = 0.8 0.8 0.82
//! metalness = 1.0
//! roughness = 0.25
//! tiling = 0.2
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::math::Vec3;

use super::{Albedo, MaterialError, PbrMaterial, TextureImage, DEFAULT_TILING, MIN_ROUGHNESS};

#[derive(Debug, Default, Clone, PartialEq)]
pub struct MaterialDescriptor {
    pub albedo: Option<Vec3>,
    pub metalness: Option<f64>,
    pub roughness: Option<f64>,
    pub tiling: Option<f64>,
}

#[derive(Debug, Default)]
pub struct LibraryLoad {
    pub materials: Vec<PbrMaterial>,
    /// Materials that failed to load, by name. Loading continues past them.
    pub rejected: Vec<(String, MaterialError)>,
}

fn invalid(name: &str, message: impl Into<String>) -> MaterialError {
    MaterialError::Invalid {
        name: name.to_string(),
        message: message.into(),
    }
}

pub fn parse_descriptor(name: &str, text: &str) -> Result<MaterialDescriptor, MaterialError> {
    let mut d = MaterialDescriptor::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| invalid(name, format!("line {}: expected key = value", n + 1)))?;
        let nums: Result<Vec<f64>, _> = value.split_whitespace().map(str::parse::<f64>).collect();
        let nums = nums.map_err(|_| invalid(name, format!("line {}: bad number in {value:?}", n + 1)))?;
        let scalar = |what: &str| -> Result<f64, MaterialError> {
            match nums.as_slice() {
                [v] => Ok(*v),
                _ => Err(invalid(name, format!("line {}: {what} takes one value", n + 1))),
            }
        };
        match key.trim() {
            "albedo" | "color" | "base_color" => match nums.as_slice() {
                [v] => d.albedo = Some(Vec3::splat(*v)),
                [r, g, b] => d.albedo = Some(Vec3::new(*r, *g, *b)),
                _ => return Err(invalid(name, format!("line {}: albedo takes 1 or 3 values", n + 1))),
            },
            "metalness" | "metallic" => d.metalness = Some(scalar("metalness")?),
            "roughness" => d.roughness = Some(scalar("roughness")?),
            "tiling" => d.tiling = Some(scalar("tiling")?),
            other => return Err(invalid(name, format!("line {}: unknown key {other:?}", n + 1))),
        }
    }
    if let Some(a) = d.albedo {
        if !a.is_finite() || a.min_component() < 0.0 || a.max_component() > 1.0 {
            return Err(invalid(name, "albedo outside [0,1]"));
        }
    }
    if let Some(m) = d.metalness {
        if !(0.0..=1.0).contains(&m) {
            return Err(invalid(name, format!("metalness {m} outside [0,1]")));
        }
    }
    if let Some(r) = d.roughness {
        if !(MIN_ROUGHNESS..=1.0).contains(&r) {
            return Err(invalid(name, format!("roughness {r} outside [{MIN_ROUGHNESS},1]")));
        }
    }
    if let Some(t) = d.tiling {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid(name, format!("tiling {t} must be positive")));
        }
    }
    Ok(d)
}

fn is_image(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png" | "jpg" | "jpeg")
    )
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, MaterialError> {
    let rd = fs::read_dir(dir).map_err(|source| MaterialError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut entries: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    Ok(entries)
}

fn find_map(files: &[PathBuf], keys: &[&str]) -> Option<PathBuf> {
    files
        .iter()
        .filter(|p| is_image(p))
        .find(|p| {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().to_ascii_lowercase())
                .unwrap_or_default();
            keys.iter().any(|k| stem.contains(k))
        })
        .cloned()
}

/// Mean of the red channel of a data map (no sRGB decoding).
fn map_mean(path: &Path) -> Result<f64, MaterialError> {
    Ok(TextureImage::load(path, false)?.mean().x)
}

fn load_directory_material(name: &str, dir: &Path) -> Result<PbrMaterial, MaterialError> {
    let files = sorted_entries(dir)?;
    let descriptor_path = dir.join("material.txt");
    let descriptor = if descriptor_path.is_file() {
        let text = fs::read_to_string(&descriptor_path).map_err(|source| MaterialError::Io {
            path: descriptor_path.clone(),
            source,
        })?;
        parse_descriptor(name, &text)?
    } else {
        MaterialDescriptor::default()
    };
    let color_map = find_map(&files, &["basecolor", "base_color", "albedo", "color", "diffuse"]);
    let metal_map = find_map(&files, &["metal"]);
    let rough_map = find_map(&files, &["rough"]);
    if color_map.is_none() && descriptor.albedo.is_none() {
        return Err(invalid(name, "no albedo map and no albedo in material.txt"));
    }
    let albedo = match (descriptor.albedo, color_map) {
        (Some(c), _) => Albedo::Constant(c),
        (None, Some(p)) => Albedo::Map(Arc::new(TextureImage::load(&p, true)?)),
        (None, None) => unreachable!(),
    };
    let metalness = match (descriptor.metalness, metal_map) {
        (Some(m), _) => m,
        (None, Some(p)) => map_mean(&p)?,
        (None, None) => 0.0,
    };
    let roughness = match (descriptor.roughness, rough_map) {
        (Some(r), _) => r,
        (None, Some(p)) => map_mean(&p)?.max(MIN_ROUGHNESS),
        (None, None) => 0.5,
    };
    Ok(PbrMaterial {
        name: name.to_string(),
        albedo,
        metalness: metalness.clamp(0.0, 1.0),
        roughness: roughness.clamp(MIN_ROUGHNESS, 1.0),
        tiling: descriptor.tiling.unwrap_or(DEFAULT_TILING),
    })
}

fn load_descriptor_material(name: &str, path: &Path) -> Result<PbrMaterial, MaterialError> {
    let text = fs::read_to_string(path).map_err(|source| MaterialError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let d = parse_descriptor(name, &text)?;
    let albedo = d
        .albedo
        .ok_or_else(|| invalid(name, "descriptor-only material needs an albedo"))?;
    Ok(PbrMaterial {
        name: name.to_string(),
        albedo: Albedo::Constant(albedo),
        metalness: d.metalness.unwrap_or(0.0),
        roughness: d.roughness.unwrap_or(0.5),
        tiling: d.tiling.unwrap_or(DEFAULT_TILING),
    })
}

/// Loads every material under `dir`, in file-name order. Bad materials are
/// reported in [`LibraryLoad::rejected`] and skipped.
pub fn load_material_library(dir: &Path) -> Result<LibraryLoad, MaterialError> {
    let mut out = LibraryLoad::default();
    for entry in sorted_entries(dir)? {
        let name = entry
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let result = if entry.is_dir() {
            load_directory_material(&name, &entry)
        } else if entry.extension().is_some_and(|e| e == "txt") {
            load_descriptor_material(&name, &entry)
        } else {
            continue;
        };
        match result {
            Ok(m) => out.materials.push(m),
            Err(e) => {
                log::warn!("skipping material {name}: {e}");
                out.rejected.push((name, e));
            }
        }
    }
    Ok(out)
}
