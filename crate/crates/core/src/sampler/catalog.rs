use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::geometry::{load_mesh_auto, transform_mesh, Pose, TriangleMesh};
use crate::material::{load_material_library, PbrMaterial, TextureImage};

use super::SamplerError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryConfig {
    pub name: String,
    pub mesh: PathBuf,
    /// Uniform scale applied at load (mesh units to metres).
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

/// Categories plus the asset directories used by the texture modes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CatalogConfig {
    pub categories: Vec<CategoryConfig>,
    pub object_images: Option<PathBuf>,
    pub backgrounds: Option<PathBuf>,
    pub materials: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Category {
    pub name: String,
    pub source: PathBuf,
    /// Mesh with the category scale applied, in metres.
    pub mesh: Arc<TriangleMesh>,
}

#[derive(Debug, Clone)]
pub struct ObjectCatalog {
    pub categories: Vec<Category>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ObjectCatalog {
    /// Loads every category mesh. Relative paths resolve against `base`.
    pub fn load(config: &CatalogConfig, base: &Path) -> Result<ObjectCatalog, SamplerError> {
        if config.categories.is_empty() {
            return Err(SamplerError::Config("catalog has no categories".into()));
        }
        let mut seen = HashSet::new();
        let mut categories = Vec::with_capacity(config.categories.len());
        for c in &config.categories {
            if !seen.insert(c.name.as_str()) {
                return Err(SamplerError::Config(format!("duplicate category name {:?}", c.name)));
            }
            if !(c.scale > 0.0 && c.scale.is_finite()) {
                return Err(SamplerError::Config(format!(
                    "category {:?}: scale {} must be positive",
                    c.name, c.scale
                )));
            }
            let path = resolve(base, &c.mesh);
            let raw = load_mesh_auto(&path)?;
            let mesh = if c.scale == 1.0 {
                raw
            } else {
                transform_mesh(&raw, &Pose::new(Default::default(), [0.0; 3], c.scale)?)
            };
            categories.push(Category {
                name: c.name.clone(),
                source: path,
                mesh: Arc::new(mesh),
            });
        }
        Ok(ObjectCatalog { categories })
    }

    pub fn from_meshes(named: Vec<(String, TriangleMesh)>) -> ObjectCatalog {
        ObjectCatalog {
            categories: named
                .into_iter()
                .map(|(name, mesh)| Category {
                    name,
                    source: PathBuf::new(),
                    mesh: Arc::new(mesh),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.categories.iter().map(|c| c.name.clone()).collect()
    }
}

/// Image files of a directory, decoded on first use and shared afterwards.
#[derive(Debug, Default)]
pub struct ImageSet {
    paths: Vec<PathBuf>,
    cache: Vec<OnceLock<Result<Arc<TextureImage>, String>>>,
}

impl ImageSet {
    pub fn scan(dir: &Path) -> Result<ImageSet, SamplerError> {
        let rd = fs::read_dir(dir).map_err(|e| {
            SamplerError::Config(format!("cannot read image directory {}: {e}", dir.display()))
        })?;
        let mut paths: Vec<PathBuf> = rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && matches!(
                        p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
                        Some("png" | "jpg" | "jpeg")
                    )
            })
            .collect();
        paths.sort();
        Ok(ImageSet::from_paths(paths))
    }

    pub fn from_paths(paths: Vec<PathBuf>) -> ImageSet {
        let cache = paths.iter().map(|_| OnceLock::new()).collect();
        ImageSet { paths, cache }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn path(&self, i: usize) -> &Path {
        &self.paths[i]
    }

    pub fn get(&self, i: usize) -> Result<Arc<TextureImage>, SamplerError> {
        self.cache[i]
            .get_or_init(|| {
                TextureImage::load(&self.paths[i], true)
                    .map(Arc::new)
                    .map_err(|e| e.to_string())
            })
            .clone()
            .map_err(SamplerError::Asset)
    }
}

#[derive(Debug, Default)]
pub struct Assets {
    pub object_images: ImageSet,
    pub backgrounds: ImageSet,
    pub materials: Vec<PbrMaterial>,
}

impl Assets {
    pub fn load(config: &CatalogConfig, base: &Path) -> Result<Assets, SamplerError> {
        let images = |d: &Option<PathBuf>| -> Result<ImageSet, SamplerError> {
            match d {
                Some(d) => ImageSet::scan(&resolve(base, d)),
                None => Ok(ImageSet::default()),
            }
        };
        let materials = match &config.materials {
            Some(d) => {
                let lib = load_material_library(&resolve(base, d))
                    .map_err(|e| SamplerError::Config(format!("material library: {e}")))?;
                lib.materials
            }
            None => Vec::new(),
        };
        Ok(Assets {
            object_images: images(&config.object_images)?,
            backgrounds: images(&config.backgrounds)?,
            materials,
        })
    }

    pub fn metal_indices(&self) -> Vec<usize> {
        (0..self.materials.len()).filter(|&i| self.materials[i].is_metal()).collect()
    }
}
