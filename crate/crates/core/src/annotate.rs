//! Masks, pixel boxes and YOLO labels from the id pass.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::render::IdBuffer;

/// Default minimum visible pixel count for a label.
pub const MIN_VISIBLE_PIXELS: usize = 25;

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },
    #[error("mask encoding holds at most 255 instances, got id {0}")]
    TooManyInstances(u32),
}

/// Inclusive pixel bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoloRecord {
    pub class: usize,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl YoloRecord {
    /// Inclusive pixel box this record was made from, rounded to the pixel grid.
    pub fn to_pixel_box(&self, width: u32, height: u32) -> PixelBox {
        let (w, h) = (width as f64, height as f64);
        let x0 = (self.cx - self.w / 2.0) * w;
        let x1 = (self.cx + self.w / 2.0) * w - 1.0;
        let y0 = (self.cy - self.h / 2.0) * h;
        let y1 = (self.cy + self.h / 2.0) * h - 1.0;
        PixelBox {
            x_min: x0.round().max(0.0) as u32,
            y_min: y0.round().max(0.0) as u32,
            x_max: x1.round().max(0.0) as u32,
            y_max: y1.round().max(0.0) as u32,
        }
    }

    pub fn to_line(&self) -> String {
        format!("{} {:.6} {:.6} {:.6} {:.6}", self.class, self.cx, self.cy, self.w, self.h)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceMask {
    pub id: u32,
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<bool>,
    pub count: usize,
}

/// One binary mask per id in `1..=instance_count`.
pub fn masks_from_id_pass(ids: &IdBuffer, instance_count: u32) -> Vec<InstanceMask> {
    let n = (ids.width * ids.height) as usize;
    let mut masks: Vec<InstanceMask> = (1..=instance_count)
        .map(|id| InstanceMask {
            id,
            width: ids.width,
            height: ids.height,
            pixels: vec![false; n],
            count: 0,
        })
        .collect();
    for (i, &id) in ids.ids.iter().enumerate() {
        if id >= 1 && id <= instance_count {
            let m = &mut masks[id as usize - 1];
            m.pixels[i] = true;
            m.count += 1;
        }
    }
    masks
}

/// Tight inclusive bounds of the set pixels.
pub fn bbox_from_mask(mask: &InstanceMask) -> Option<PixelBox> {
    let w = mask.width as usize;
    let mut b: Option<PixelBox> = None;
    for (i, _) in mask.pixels.iter().enumerate().filter(|(_, &s)| s) {
        let (x, y) = ((i % w) as u32, (i / w) as u32);
        b = Some(match b {
            None => PixelBox {
                x_min: x,
                y_min: y,
                x_max: x,
                y_max: y,
            },
            Some(b) => PixelBox {
                x_min: b.x_min.min(x),
                y_min: b.y_min.min(y),
                x_max: b.x_max.max(x),
                y_max: b.y_max.max(y),
            },
        });
    }
    b
}

pub fn to_yolo(b: PixelBox, width: u32, height: u32, class: usize) -> YoloRecord {
    let (w, h) = (width as f64, height as f64);
    YoloRecord {
        class,
        cx: (b.x_min + b.x_max + 1) as f64 / 2.0 / w,
        cy: (b.y_min + b.y_max + 1) as f64 / 2.0 / h,
        w: (b.x_max - b.x_min + 1) as f64 / w,
        h: (b.y_max - b.y_min + 1) as f64 / h,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub instance: u32,
    pub pixel_box: PixelBox,
    pub visible_pixels: usize,
    pub record: YoloRecord,
}

/// Labels for every target whose mask has at least `min_visible` pixels, in
/// instance-id order. `classes[i]` is the class of instance `i + 1`.
pub fn annotate(ids: &IdBuffer, classes: &[usize], min_visible: usize) -> Vec<Annotation> {
    masks_from_id_pass(ids, classes.len() as u32)
        .iter()
        .filter(|m| m.count >= min_visible.max(1))
        .filter_map(|m| {
            let b = bbox_from_mask(m)?;
            Some(Annotation {
                instance: m.id,
                pixel_box: b,
                visible_pixels: m.count,
                record: to_yolo(b, ids.width, ids.height, classes[m.id as usize - 1]),
            })
        })
        .collect()
}

pub fn labels_text(records: &[YoloRecord]) -> String {
    let mut s = String::new();
    for r in records {
        let _ = writeln!(s, "{}", r.to_line());
    }
    s
}

/// Writes one line per record; an empty list still creates the file.
pub fn write_labels(records: &[YoloRecord], path: &Path) -> Result<(), AnnotateError> {
    fs::write(path, labels_text(records)).map_err(|source| AnnotateError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// 8-bit grayscale PNG with the instance id as pixel value.
pub fn write_mask_image(ids: &IdBuffer, path: &Path) -> Result<(), AnnotateError> {
    let mut bytes = Vec::with_capacity(ids.ids.len());
    for &id in &ids.ids {
        bytes.push(u8::try_from(id).map_err(|_| AnnotateError::TooManyInstances(id))?);
    }
    let img = image::GrayImage::from_raw(ids.width, ids.height, bytes).expect("buffer size matches dimensions");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| AnnotateError::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

pub fn read_mask_image(path: &Path) -> Result<IdBuffer, AnnotateError> {
    let img = image::open(path)
        .map_err(|e| AnnotateError::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .to_luma8();
    Ok(IdBuffer {
        width: img.width(),
        height: img.height(),
        ids: img.as_raw().iter().map(|&v| v as u32).collect(),
    })
}
