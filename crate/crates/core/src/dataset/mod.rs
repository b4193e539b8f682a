//! Configuration, the per-image generation loop, train/val split, manifest,
//! YOLO descriptor and dataset statistics.

mod config;
mod generate;
mod manifest;
mod stats;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{load_config, parse_config, GenerationConfig, Preset, MAX_MASK_INSTANCES};
pub use generate::{
    descriptor_text, generate_dataset, split_dataset, split_for, train_count, write_descriptor, Generator, ImageSample,
};
pub use manifest::{
    CameraSummary, DatasetManifest, FailedImage, ImageEntry, InstanceSummary, LightSummary, SceneSummary, Split,
};
pub use stats::{dataset_stats, ClassCount, Histogram, StatsReport};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{}: {message}", path.display())]
    ConfigFile {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },
    #[error(transparent)]
    Sampler(#[from] crate::sampler::SamplerError),
    #[error(transparent)]
    Render(#[from] crate::render::RenderError),
    #[error(transparent)]
    Annotate(#[from] crate::annotate::AnnotateError),
}

impl DatasetError {
    /// True for problems with the configuration rather than the run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            DatasetError::Parse { .. }
                | DatasetError::ConfigFile { .. }
                | DatasetError::Invalid(_)
                | DatasetError::Sampler(_)
        )
    }
}
