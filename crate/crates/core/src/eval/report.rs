use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{FailureReport, MetricsReport};

/// What `evaluate` writes as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub class_names: Vec<String>,
    pub metrics: MetricsReport,
    pub failures: FailureReport,
}

fn name(names: &[String], c: usize) -> String {
    names.get(c).cloned().unwrap_or_else(|| c.to_string())
}

fn pct(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

/// Aligned per-class table followed by the overall row, values in percent.
pub fn metrics_text(m: &MetricsReport, names: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "IoU={:.2} conf={:.2}", m.config.iou, m.config.confidence);
    let w = m
        .classes
        .iter()
        .map(|c| name(names, c.class).len())
        .max()
        .unwrap_or(3)
        .max(5);
    let _ = writeln!(
        s,
        "{:<w$}  {:>6}  {:>6}  {:>6}  {:>6}  {:>9}",
        "class", "gt", "P", "R", "mAP50", "mAP50-95"
    );
    for c in &m.classes {
        let _ = writeln!(
            s,
            "{:<w$}  {:>6}  {:>6}  {:>6}  {:>6}  {:>9}",
            name(names, c.class),
            c.gt_count,
            pct(c.precision),
            pct(c.recall),
            pct(c.ap50),
            pct(c.ap50_95)
        );
    }
    let gt: usize = m.classes.iter().map(|c| c.gt_count).sum();
    let _ = writeln!(
        s,
        "{:<w$}  {:>6}  {:>6}  {:>6}  {:>6}  {:>9}",
        "all",
        gt,
        pct(m.precision),
        pct(m.recall),
        pct(m.map50),
        pct(m.map50_95)
    );
    if m.precision_undefined {
        let _ = writeln!(s, "note: no prediction passed the confidence threshold; precision reported as 0");
    }
    s
}

pub fn failure_text(f: &FailureReport, names: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "matched {}, missed {}, wrong detections {} (ground truth side) / {} (prediction side), background false positives {}",
        f.matched, f.missed, f.wrong_gt, f.wrong_pred, f.background
    );
    if !f.confusion.is_empty() {
        let _ = writeln!(s, "confusions (ground truth -> prediction):");
        for c in &f.confusion {
            let _ = writeln!(s, "  {} -> {}: {}", name(names, c.gt_class), name(names, c.pred_class), c.count);
        }
    }
    s
}
