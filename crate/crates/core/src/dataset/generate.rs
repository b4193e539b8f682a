use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::annotate::{annotate, write_labels, write_mask_image, PixelBox};
use crate::postfx::apply_postfx;
use crate::render::{render, render_id_pass, tone_map, RenderScene};
use crate::rng::{derive_seed, stream, substream};
use crate::sampler::{check_assets, sample_scene, Assets, ObjectCatalog, SceneLayout};

use super::{DatasetError, DatasetManifest, FailedImage, GenerationConfig, ImageEntry, SceneSummary, Split};

/// Number of training images for `n` images at `ratio`, i.e. `⌈ratio·n⌉`
/// without the rounding noise of the float product.
pub fn train_count(n: usize, ratio: f64) -> usize {
    let x = ratio * n as f64;
    let k = if (x - x.round()).abs() < 1e-9 * (n.max(1) as f64) {
        x.round()
    } else {
        x.ceil()
    };
    (k.max(0.0) as usize).min(n)
}

/// Uniform random permutation; the first `⌈ratio·n⌉` images train.
pub fn split_dataset<R: Rng + ?Sized>(n: usize, ratio: f64, rng: &mut R) -> Vec<Split> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let k = train_count(n, ratio);
    if n > 0 && k == n {
        log::warn!("validation split is empty ({n} images at ratio {ratio})");
    }
    let mut out = vec![Split::Val; n];
    for &i in &order[..k] {
        out[i] = Split::Train;
    }
    out
}

/// Split assignment for a config, from its own stream.
pub fn split_for(config: &GenerationConfig) -> Vec<Split> {
    split_dataset(config.image_count, config.split_ratio, &mut substream(config.seed, 0, stream::SPLIT))
}

/// YOLO dataset descriptor. Paths are relative to the file itself; an
/// empty validation split points at the training images.
pub fn descriptor_text(categories: &[String], val_empty: bool) -> String {
    let mut s = String::from("train: images/train\n");
    if val_empty {
        log::warn!("validation split is empty; descriptor points val at the training images");
        s.push_str("val: images/train\n");
    } else {
        s.push_str("val: images/val\n");
    }
    s.push_str(&format!("nc: {}\nnames:\n", categories.len()));
    for (i, n) in categories.iter().enumerate() {
        // A JSON string is also a valid YAML scalar.
        s.push_str(&format!("  {i}: {}\n", serde_json::to_string(n).expect("string serializes")));
    }
    s
}

pub fn write_descriptor(manifest: &DatasetManifest, path: &Path) -> Result<(), DatasetError> {
    let text = descriptor_text(&manifest.categories, manifest.split_count(Split::Val) == 0);
    fs::write(path, text).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Everything about one image before it touches the disk.
pub struct ImageSample {
    pub layout: SceneLayout,
    pub image: image::RgbImage,
    pub ids: crate::render::IdBuffer,
    pub labels: Vec<crate::annotate::YoloRecord>,
    pub summary: SceneSummary,
    pub postfx: crate::postfx::PostFxRecord,
    pub discarded_samples: usize,
}

/// Loaded catalog and assets shared by every image of a run.
pub struct Generator {
    pub config: GenerationConfig,
    pub catalog: ObjectCatalog,
    pub assets: Assets,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Generator {
    /// Validates the config and loads every mesh and asset.
    pub fn new(config: &GenerationConfig) -> Result<Generator, DatasetError> {
        let errs = config.validate();
        if !errs.is_empty() {
            return Err(DatasetError::Invalid(errs));
        }
        let catalog = ObjectCatalog::load(&config.catalog, &config.base_dir)?;
        let assets = Assets::load(&config.catalog, &config.base_dir)?;
        check_assets(&config.sampler.textures, &assets)?;
        Ok(Generator {
            config: config.clone(),
            catalog,
            assets,
        })
    }

    pub fn scene_seed(&self, index: usize) -> u64 {
        derive_seed(&[self.config.seed, index as u64, stream::SCENE])
    }

    pub fn sample_layout(&self, index: usize) -> Result<SceneLayout, DatasetError> {
        let c = &self.config;
        let mut rng = substream(c.seed, index as u64, stream::SCENE);
        Ok(sample_scene(&self.catalog, &self.assets, &c.sampler, c.width, c.height, &mut rng)?)
    }

    /// Runs the full per-image pipeline in memory with the configured backend.
    pub fn sample_image(&self, index: usize) -> Result<ImageSample, DatasetError> {
        self.sample_image_with(index, self.config.render.backend)
    }

    pub fn sample_image_with(&self, index: usize, backend: crate::render::Backend) -> Result<ImageSample, DatasetError> {
        let c = &self.config;
        let layout = self.sample_layout(index)?;
        let scene = RenderScene::from_layout(&layout)?;
        let mut settings = c.render.clone();
        settings.backend = backend;
        settings.seed = derive_seed(&[c.seed, index as u64, stream::RENDER]);
        let hdr = render(&scene, &layout.camera, &settings);
        let ids = render_id_pass(&scene, &layout.camera);
        let classes: Vec<usize> = layout.targets.iter().map(|t| t.category().expect("targets have a category")).collect();
        let anns = annotate(&ids, &classes, c.min_visible_pixels);
        let mut visible = vec![0usize; classes.len()];
        for &id in &ids.ids {
            if id > 0 {
                visible[id as usize - 1] += 1;
            }
        }
        let mut boxes: Vec<Option<PixelBox>> = vec![None; classes.len()];
        for a in &anns {
            boxes[a.instance as usize - 1] = Some(a.pixel_box);
        }
        let summary = SceneSummary::new(&layout, &self.catalog.names(), &visible, &boxes);
        let ldr = tone_map(&hdr, settings.exposure);
        let (image, postfx) = apply_postfx(&ldr, &c.postfx, &mut substream(c.seed, index as u64, stream::POSTFX));
        Ok(ImageSample {
            layout,
            image,
            ids,
            labels: anns.iter().map(|a| a.record).collect(),
            summary,
            postfx,
            discarded_samples: hdr.clamped,
        })
    }

    /// Generates, writes and records one image.
    fn write_image(&self, root: &Path, index: usize, split: Split) -> Result<ImageEntry, DatasetError> {
        let s = self.sample_image(index)?;
        let name = format!("{index:06}");
        let image = PathBuf::from("images").join(split.dir()).join(format!("{name}.png"));
        let labels = PathBuf::from("labels").join(split.dir()).join(format!("{name}.txt"));
        let mask = PathBuf::from("masks").join(format!("{name}.png"));
        let p = root.join(&image);
        s.image
            .save_with_format(&p, image::ImageFormat::Png)
            .map_err(|e| DatasetError::Image {
                path: p.clone(),
                message: e.to_string(),
            })?;
        write_labels(&s.labels, &root.join(&labels))?;
        write_mask_image(&s.ids, &root.join(&mask))?;
        Ok(ImageEntry {
            index,
            image,
            labels,
            mask,
            seed: self.scene_seed(index),
            split,
            label_count: s.labels.len(),
            scene: s.summary,
            postfx: s.postfx,
            discarded_samples: s.discarded_samples,
        })
    }

    /// The whole run. `progress` is called once per finished image, in any order.
    pub fn generate(&self, progress: &(dyn Fn(usize) + Sync)) -> Result<DatasetManifest, DatasetError> {
        let c = &self.config;
        let root = c.output_path();
        for d in ["images/train", "images/val", "labels/train", "labels/val", "masks"] {
            let p = root.join(d);
            fs::create_dir_all(&p).map_err(io_err(&p))?;
        }
        let splits = split_for(c);
        let results: Vec<Result<ImageEntry, FailedImage>> = (0..c.image_count)
            .into_par_iter()
            .map(|i| {
                let r = self.write_image(&root, i, splits[i]).map_err(|e| {
                    log::warn!("image {i} failed: {e}");
                    FailedImage {
                        index: i,
                        error: e.to_string(),
                    }
                });
                progress(i);
                r
            })
            .collect();
        let mut manifest = DatasetManifest {
            seed: c.seed,
            image_count: c.image_count,
            width: c.width,
            height: c.height,
            categories: self.catalog.names(),
            config_digest: c.digest(),
            entries: Vec::new(),
            failures: Vec::new(),
        };
        for r in results {
            match r {
                Ok(e) => manifest.entries.push(e),
                Err(f) => manifest.failures.push(f),
            }
        }
        let resolved = root.join("config.resolved.json");
        fs::write(&resolved, c.resolved_json()).map_err(io_err(&resolved))?;
        write_descriptor(&manifest, &root.join("dataset.yaml"))?;
        let mp = root.join("manifest.json");
        fs::write(&mp, manifest.to_json()).map_err(io_err(&mp))?;
        Ok(manifest)
    }
}

/// Validates, loads assets and generates the dataset on `threads` workers
/// (all available when `None`).
pub fn generate_dataset(config: &GenerationConfig, threads: Option<usize>) -> Result<DatasetManifest, DatasetError> {
    let generator = Generator::new(config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().map_err(|e| DatasetError::Invalid(vec![format!("thread pool: {e}")]))?;
    pool.install(|| generator.generate(&|_| {}))
}
