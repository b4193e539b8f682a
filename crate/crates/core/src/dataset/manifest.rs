use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::annotate::PixelBox;
use crate::material::MaterialSummary;
use crate::postfx::PostFxRecord;
use crate::sampler::{ObjectKind, SceneLayout};

use super::DatasetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
}

impl Split {
    pub fn dir(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub id: u32,
    pub kind: ObjectKind,
    /// Category name for targets, primitive shape for distractors.
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub class: Option<usize>,
    pub translation: [f64; 3],
    pub rotation_deg: [f64; 3],
    pub scale: f64,
    pub material: MaterialSummary,
    pub visible_pixels: usize,
    /// Present when the instance received a label.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bbox: Option<PixelBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSummary {
    pub r: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    pub focal_length_mm: f64,
    pub fov_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightSummary {
    pub center: [f64; 3],
    pub size: [f64; 2],
    pub normal: [f64; 3],
    pub power_w: f64,
    pub color: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub instances: Vec<InstanceSummary>,
    pub camera: CameraSummary,
    pub lights: Vec<LightSummary>,
    pub background: MaterialSummary,
    pub scene_box_side: f64,
    pub placement_failures: usize,
}

impl SceneSummary {
    /// `visible[i]` and `boxes[i]` describe instance `i + 1`.
    pub fn new(layout: &SceneLayout, names: &[String], visible: &[usize], boxes: &[Option<PixelBox>]) -> SceneSummary {
        let instances = layout
            .objects()
            .map(|o| {
                let k = o.id as usize - 1;
                let (source, class) = match o.category() {
                    Some(c) => (names[c].clone(), Some(c)),
                    None => match o.source {
                        crate::sampler::ObjectSource::Primitive(s) => (format!("{s:?}").to_lowercase(), None),
                        crate::sampler::ObjectSource::Category(_) => unreachable!(),
                    },
                };
                InstanceSummary {
                    id: o.id,
                    kind: o.kind,
                    source,
                    class,
                    translation: o.pose.translation.to_array(),
                    rotation_deg: o.pose.rotation.map(f64::to_degrees),
                    scale: o.pose.scale,
                    material: o.material.summary(),
                    visible_pixels: if o.kind == ObjectKind::Target { visible.get(k).copied().unwrap_or(0) } else { 0 },
                    bbox: boxes.get(k).copied().flatten(),
                }
            })
            .collect();
        let c = &layout.camera;
        SceneSummary {
            instances,
            camera: CameraSummary {
                r: c.r,
                theta_deg: c.theta.to_degrees(),
                phi_deg: c.phi.to_degrees(),
                position: c.position.to_array(),
                look_at: c.look_at.to_array(),
                focal_length_mm: c.focal_length_mm,
                fov_deg: c.fov.to_degrees(),
            },
            lights: layout
                .lights
                .iter()
                .map(|l| LightSummary {
                    center: l.center.to_array(),
                    size: l.half_extents.map(|h| 2.0 * h),
                    normal: l.normal.to_array(),
                    power_w: l.power,
                    color: l.color.to_array(),
                })
                .collect(),
            background: layout.background.summary(),
            scene_box_side: layout.scene_box.side,
            placement_failures: layout.placement_failures,
        }
    }

    pub fn targets(&self) -> impl Iterator<Item = &InstanceSummary> {
        self.instances.iter().filter(|i| i.kind == ObjectKind::Target)
    }
}

/// One successfully generated image. Paths are relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub index: usize,
    pub image: PathBuf,
    pub labels: PathBuf,
    pub mask: PathBuf,
    /// Key of the scene stream, enough to regenerate the image.
    pub seed: u64,
    pub split: Split,
    pub label_count: usize,
    pub scene: SceneSummary,
    pub postfx: PostFxRecord,
    /// Path-tracer samples discarded as non-finite or negative.
    #[serde(skip_serializing_if = "is_zero", default)]
    pub discarded_samples: usize,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedImage {
    pub index: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub image_count: usize,
    pub width: u32,
    pub height: u32,
    pub categories: Vec<String>,
    /// SHA-256 of the resolved configuration.
    pub config_digest: String,
    pub entries: Vec<ImageEntry>,
    #[serde(default)]
    pub failures: Vec<FailedImage>,
}

impl DatasetManifest {
    pub fn empty(categories: Vec<String>) -> DatasetManifest {
        DatasetManifest {
            seed: 0,
            image_count: 0,
            width: 0,
            height: 0,
            categories,
            config_digest: String::new(),
            entries: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn split_count(&self, split: Split) -> usize {
        self.entries.iter().filter(|e| e.split == split).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn load(path: &Path) -> Result<DatasetManifest, DatasetError> {
        let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| DatasetError::ConfigFile {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Files referenced by the manifest that are missing under `root`.
    pub fn missing_files(&self, root: &Path) -> Vec<PathBuf> {
        self.entries
            .iter()
            .flat_map(|e| [&e.image, &e.labels, &e.mask])
            .filter(|p| !root.join(p).is_file())
            .cloned()
            .collect()
    }
}
