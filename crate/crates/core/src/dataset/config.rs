use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::postfx::PostFxConfig;
use crate::render::{Backend, RenderSettings};
use crate::sampler::{CatalogConfig, SamplerConfig, TexturePolicy};

use super::DatasetError;

/// Instance ids are stored in 8-bit masks.
pub const MAX_MASK_INSTANCES: usize = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Robotics,
    U1,
    U2,
    U3,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Robotics, Preset::U1, Preset::U2, Preset::U3];

    /// Images per category with realistic textures.
    pub fn images_per_category(self) -> usize {
        match self {
            Preset::Robotics => 800,
            Preset::U1 => 1500,
            Preset::U2 => 3000,
            Preset::U3 => 1500,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Robotics => "robotics",
            Preset::U1 => "u1",
            Preset::U2 => "u2",
            Preset::U3 => "u3",
        }
    }

    /// Partial configuration the preset stands for. User keys override it.
    pub fn overrides(self) -> Value {
        let textures = |mode: &str| serde_json::to_value(TexturePolicy::only(mode)).expect("serializable");
        let mut v = serde_json::json!({
            "render": { "backend": Backend::PathTraced },
        });
        let sampler = match self {
            Preset::Robotics | Preset::U3 => serde_json::json!({ "textures": textures("pbr_metal") }),
            // Metal and plastic library entries alike.
            Preset::U1 => serde_json::json!({
                "textures": textures("pbr"),
                "objects": { "rotation_limits_deg": [30.0, 30.0, 180.0] },
            }),
            // Expects a plastic-only material library.
            Preset::U2 => serde_json::json!({ "textures": textures("pbr") }),
        };
        v["sampler"] = sampler;
        v
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Preset, String> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown preset {s:?} (expected robotics, u1, u2 or u3)"))
    }
}

fn default_count() -> usize {
    100
}
fn default_side() -> u32 {
    720
}
fn default_ratio() -> f64 {
    0.9
}
fn default_min_visible() -> usize {
    crate::annotate::MIN_VISIBLE_PIXELS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    pub catalog: CatalogConfig,
    pub output_dir: PathBuf,
    #[serde(default = "default_count")]
    pub image_count: usize,
    #[serde(default = "default_side")]
    pub width: u32,
    #[serde(default = "default_side")]
    pub height: u32,
    #[serde(default)]
    pub render: RenderSettings,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub postfx: PostFxConfig,
    /// Fraction of images assigned to the training split.
    #[serde(default = "default_ratio")]
    pub split_ratio: f64,
    #[serde(default)]
    pub seed: u64,
    /// Targets with fewer visible pixels get no label.
    #[serde(default = "default_min_visible")]
    pub min_visible_pixels: usize,
    /// Directory relative paths resolve against; the config file's directory.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl GenerationConfig {
    /// All defaults around a catalog and an output directory.
    pub fn new(catalog: CatalogConfig, output_dir: impl Into<PathBuf>) -> GenerationConfig {
        let v = serde_json::json!({
            "catalog": catalog,
            "output_dir": output_dir.into(),
        });
        serde_json::from_value(v).expect("minimal config deserializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// Every invariant violation, including missing files.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.image_count == 0 {
            errs.push("image_count must be >= 1".into());
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            errs.push(format!("split_ratio {} must lie in (0, 1)", self.split_ratio));
        }
        for (name, v) in [("width", self.width), ("height", self.height)] {
            if v < 64 {
                errs.push(format!("{name} {v} must be >= 64"));
            }
        }
        let instances = self.sampler.objects.max_count + self.sampler.distractors.max_count;
        if instances > MAX_MASK_INSTANCES {
            errs.push(format!(
                "sampler.objects.max_count + sampler.distractors.max_count = {instances} exceeds {MAX_MASK_INSTANCES}"
            ));
        }
        if self.min_visible_pixels == 0 {
            errs.push("min_visible_pixels must be >= 1".into());
        }
        if self.catalog.categories.is_empty() {
            errs.push("catalog.categories must not be empty".into());
        }
        let mut seen = std::collections::HashSet::new();
        for (i, c) in self.catalog.categories.iter().enumerate() {
            if c.name.trim().is_empty() {
                errs.push(format!("catalog.categories[{i}].name is empty"));
            } else if !seen.insert(c.name.as_str()) {
                errs.push(format!("catalog.categories[{i}].name {:?} is duplicated", c.name));
            }
            if !(c.scale > 0.0 && c.scale.is_finite()) {
                errs.push(format!("catalog.categories[{i}].scale must be positive"));
            }
            let p = self.resolve(&c.mesh);
            if !p.is_file() {
                errs.push(format!("catalog.categories[{i}].mesh {} does not exist", p.display()));
            }
        }
        for (name, dir) in [
            ("catalog.object_images", &self.catalog.object_images),
            ("catalog.backgrounds", &self.catalog.backgrounds),
            ("catalog.materials", &self.catalog.materials),
        ] {
            if let Some(d) = dir {
                let p = self.resolve(d);
                if !p.is_dir() {
                    errs.push(format!("{name} {} is not a directory", p.display()));
                }
            }
        }
        errs.extend(self.render.validate());
        errs.extend(self.sampler.validate());
        errs.extend(self.postfx.validate());
        errs
    }

    /// The configuration as written next to the dataset: asset paths made
    /// absolute, output directory `.`.
    pub fn resolved(&self) -> GenerationConfig {
        let mut c = self.clone();
        for cat in &mut c.catalog.categories {
            cat.mesh = self.resolve(&cat.mesh);
        }
        for d in [&mut c.catalog.object_images, &mut c.catalog.backgrounds, &mut c.catalog.materials] {
            if let Some(p) = d {
                *p = self.resolve(p);
            }
        }
        c.output_dir = PathBuf::from(".");
        c
    }

    pub fn resolved_json(&self) -> String {
        serde_json::to_string_pretty(&self.resolved()).expect("config serializes") + "\n"
    }

    /// SHA-256 of the resolved configuration.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.resolved_json().as_bytes()))
    }
}

/// Recursively overlays `top` onto `base`; objects merge, anything else replaces.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, t) => *b = t,
    }
}

/// Parses a config document. `base_dir` anchors relative paths.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<GenerationConfig, DatasetError> {
    let parse_err = |e: serde_json::Error| DatasetError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    };
    let user: Value = serde_json::from_str(text).map_err(parse_err)?;
    let preset = match user.get("preset") {
        Some(p) => Some(serde_json::from_value::<Preset>(p.clone()).map_err(|_| {
            DatasetError::Invalid(vec![format!("preset {p} is not one of robotics, u1, u2, u3")])
        })?),
        None => None,
    };
    let mut doc = Value::Null;
    if let Some(p) = preset {
        doc = p.overrides();
        merge(&mut doc, user.clone());
        if user.get("image_count").is_none() {
            let n = user
                .pointer("/catalog/categories")
                .and_then(Value::as_array)
                .map_or(0, Vec::len);
            doc["image_count"] = (p.images_per_category() * n.max(1)).into();
        }
    }
    let mut config: GenerationConfig = if preset.is_none() {
        serde_json::from_str(text).map_err(parse_err)?
    } else {
        // The merged document has no source positions.
        serde_json::from_value(doc).map_err(|e| DatasetError::Parse {
            line: 0,
            column: 0,
            message: e.to_string(),
        })?
    };
    config.base_dir = base_dir.to_path_buf();
    Ok(config)
}

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<GenerationConfig, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let config = parse_config(&text, &base).map_err(|e| match e {
        DatasetError::Parse { line, column, message } => DatasetError::ConfigFile {
            path: path.to_path_buf(),
            line,
            column,
            message,
        },
        other => other,
    })?;
    let errs = config.validate();
    if errs.is_empty() {
        Ok(config)
    } else {
        Err(DatasetError::Invalid(errs))
    }
}
