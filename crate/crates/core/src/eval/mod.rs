//! Detection evaluation: IoU matching, precision and recall at a confidence
//! threshold, 101-point AP, mAP@50 and mAP@50-95, and a failure taxonomy.

mod metrics;
mod report;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use metrics::{
    average_precision, failure_analysis, iou, map_metrics, match_detections, ClassMetrics, Confusion, EvalConfig,
    FailureReport, MatchResult, MetricsReport, IOU_SWEEP,
};
pub use report::{failure_text, metrics_text, EvaluationReport};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Normalized center-size box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxN {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BoxN {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> BoxN {
        BoxN { cx, cy, w, h }
    }

    /// `[x0, y0, x1, y1]`.
    pub fn corners(&self) -> [f64; 4] {
        [
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        ]
    }

    pub fn from_corners(x0: f64, y0: f64, x1: f64, y1: f64) -> BoxN {
        BoxN::new((x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image: String,
    pub class: usize,
    pub bbox: BoxN,
    /// 1.0 for ground truth.
    pub confidence: f64,
}

impl DetectionRecord {
    pub fn new(image: impl Into<String>, class: usize, bbox: BoxN, confidence: f64) -> DetectionRecord {
        DetectionRecord {
            image: image.into(),
            class,
            bbox,
            confidence,
        }
    }
}

fn malformed(path: &Path, line: usize, message: String) -> EvalError {
    EvalError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    }
}

/// Parses `class cx cy w h [conf]`. Errors name the offending field.
fn parse_fields(fields: &[&str], with_confidence: bool) -> Result<(usize, BoxN, f64), String> {
    let want = if with_confidence { 6 } else { 5 };
    if fields.len() != want {
        return Err(format!("expected {want} fields, found {}", fields.len()));
    }
    let class: usize = fields[0]
        .parse()
        .map_err(|_| format!("class {:?} is not a non-negative integer", fields[0]))?;
    let mut v = [0.0; 5];
    let names = ["cx", "cy", "w", "h", "confidence"];
    for (i, slot) in v.iter_mut().enumerate().take(want - 1) {
        let s = fields[i + 1];
        let x: f64 = s.parse().map_err(|_| format!("{} {s:?} is not a number", names[i]))?;
        let ok = match i {
            0 | 1 | 4 => (0.0..=1.0).contains(&x),
            _ => x > 0.0 && x <= 1.0,
        };
        if !ok {
            return Err(format!("{} {x} is out of range", names[i]));
        }
        *slot = x;
    }
    let conf = if with_confidence { v[4] } else { 1.0 };
    Ok((class, BoxN::new(v[0], v[1], v[2], v[3]), conf))
}

fn read(path: &Path) -> Result<String, EvalError> {
    fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn image_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// `.txt` files of a directory in name order.
fn label_files(dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let io = |source| EvalError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for e in fs::read_dir(dir).map_err(io)? {
        let p = e.map_err(io)?.path();
        if p.is_file() && p.extension().is_some_and(|x| x == "txt") {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

fn parse_file(path: &Path, with_confidence: bool, out: &mut Vec<DetectionRecord>) -> Result<(), EvalError> {
    let id = image_id(path);
    for (n, line) in read(path)?.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let (class, bbox, conf) = parse_fields(&fields, with_confidence).map_err(|m| malformed(path, n + 1, m))?;
        out.push(DetectionRecord::new(id.clone(), class, bbox, conf));
    }
    Ok(())
}

/// Ground truth, plus the id of every label file including empty ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub images: Vec<String>,
    pub records: Vec<DetectionRecord>,
}

/// Reads a YOLO label directory; nested `train`/`val` folders are included.
pub fn load_ground_truth(dir: &Path) -> Result<GroundTruth, EvalError> {
    let mut gt = GroundTruth::default();
    let mut dirs = vec![dir.to_path_buf()];
    for sub in ["train", "val"] {
        if dir.join(sub).is_dir() {
            dirs.push(dir.join(sub));
        }
    }
    for d in dirs {
        for f in label_files(&d)? {
            gt.images.push(image_id(&f));
            parse_file(&f, false, &mut gt.records)?;
        }
    }
    Ok(gt)
}

/// Predictions from a directory of per-image files (`class cx cy w h conf`)
/// or a single file of `image_id class cx cy w h conf` lines.
pub fn load_predictions(path: &Path) -> Result<Vec<DetectionRecord>, EvalError> {
    let mut out = Vec::new();
    if path.is_dir() {
        for f in label_files(path)? {
            parse_file(&f, true, &mut out)?;
        }
        return Ok(out);
    }
    for (n, line) in read(path)?.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() || fields[0].starts_with('#') {
            continue;
        }
        let (class, bbox, conf) = parse_fields(&fields[1..], true).map_err(|m| malformed(path, n + 1, m))?;
        out.push(DetectionRecord::new(fields[0], class, bbox, conf));
    }
    Ok(out)
}

/// Every record's class must index into `class_count` names.
pub fn check_classes(records: &[DetectionRecord], class_count: usize) -> Result<(), String> {
    match records.iter().find(|r| r.class >= class_count) {
        Some(r) => Err(format!(
            "image {}: class {} is not below the class count {class_count}",
            r.image, r.class
        )),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests;
