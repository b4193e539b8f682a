use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{BoxN, DetectionRecord};

/// IoU thresholds averaged by mAP@50-95.
pub const IOU_SWEEP: [f64; 10] = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

pub fn iou(a: &BoxN, b: &BoxN) -> f64 {
    let [ax0, ay0, ax1, ay1] = a.corners();
    let [bx0, by0, bx1, by1] = b.corners();
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    // Areas from the same corners, so that iou(a, a) is exactly 1.
    let union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Prediction `i` matched ground truth `pred_to_gt[i]`, and the reverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    pub pred_to_gt: Vec<Option<usize>>,
    pub gt_to_pred: Vec<Option<usize>>,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.pred_to_gt.iter().filter(|m| m.is_some()).count()
    }

    pub fn false_positives(&self) -> usize {
        self.pred_to_gt.len() - self.true_positives()
    }

    pub fn false_negatives(&self) -> usize {
        self.gt_to_pred.iter().filter(|m| m.is_none()).count()
    }
}

/// Prediction indices by descending confidence, ties in input order.
fn confidence_order(preds: &[DetectionRecord]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].confidence.total_cmp(&preds[a].confidence));
    order
}

/// Greedy matching: in confidence order, each prediction takes the unmatched
/// ground truth of highest IoU at or above `threshold` in the same image
/// (and class, when `class_aware`). Equal IoUs go to the earlier ground truth.
pub fn match_detections(
    preds: &[DetectionRecord],
    gts: &[DetectionRecord],
    threshold: f64,
    class_aware: bool,
) -> MatchResult {
    let mut by_key: HashMap<(&str, Option<usize>), Vec<usize>> = HashMap::new();
    for (j, g) in gts.iter().enumerate() {
        by_key
            .entry((g.image.as_str(), class_aware.then_some(g.class)))
            .or_default()
            .push(j);
    }
    let mut pred_to_gt = vec![None; preds.len()];
    let mut gt_to_pred = vec![None; gts.len()];
    for i in confidence_order(preds) {
        let p = &preds[i];
        let Some(cands) = by_key.get(&(p.image.as_str(), class_aware.then_some(p.class))) else {
            continue;
        };
        let mut best: Option<(usize, f64)> = None;
        for &j in cands {
            if gt_to_pred[j].is_some() {
                continue;
            }
            let v = iou(&p.bbox, &gts[j].bbox);
            if v >= threshold && best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        if let Some((j, _)) = best {
            pred_to_gt[i] = Some(j);
            gt_to_pred[j] = Some(i);
        }
    }
    MatchResult { pred_to_gt, gt_to_pred }
}

/// 101-point interpolated AP of `(confidence, is_tp)` pairs for one class.
/// `None` when there is nothing to score; 0 when only false positives exist.
pub fn average_precision(scored: &[(f64, bool)], gt_count: usize) -> Option<f64> {
    if gt_count == 0 {
        return if scored.is_empty() { None } else { Some(0.0) };
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].0.total_cmp(&scored[a].0));
    let mut recall = Vec::with_capacity(order.len());
    let mut precision = Vec::with_capacity(order.len());
    let mut tp = 0usize;
    for (k, &i) in order.iter().enumerate() {
        tp += scored[i].1 as usize;
        recall.push(tp as f64 / gt_count as f64);
        precision.push(tp as f64 / (k + 1) as f64);
    }
    // Precision envelope from the right.
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    let mut sum = 0.0;
    for r in 0..=100 {
        let r = r as f64 / 100.0;
        let k = recall.partition_point(|&x| x < r - 1e-12);
        if k < precision.len() {
            sum += precision[k];
        }
    }
    Some(sum / 101.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// IoU used for precision, recall and the failure taxonomy.
    pub iou: f64,
    /// Predictions below this are ignored for precision and recall.
    pub confidence: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { iou: 0.6, confidence: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub gt_count: usize,
    pub ap50: f64,
    pub ap50_95: f64,
    pub precision: f64,
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: EvalConfig,
    /// Classes with ground truth or predictions, by index.
    pub classes: Vec<ClassMetrics>,
    pub map50: f64,
    pub map50_95: f64,
    /// Over all classes at the configured IoU and confidence.
    pub precision: f64,
    pub recall: f64,
    /// Set when no prediction survived the threshold; precision is then 0.
    pub precision_undefined: bool,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn classes_of(preds: &[DetectionRecord], gts: &[DetectionRecord]) -> Vec<usize> {
    let mut c: Vec<usize> = preds.iter().chain(gts).map(|r| r.class).collect();
    c.sort_unstable();
    c.dedup();
    c
}

/// Per-class AP at each threshold of `thresholds`, from class-aware matching
/// of every prediction.
fn ap_table(preds: &[DetectionRecord], gts: &[DetectionRecord], thresholds: &[f64]) -> BTreeMap<usize, Vec<f64>> {
    let mut table: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut gt_count: BTreeMap<usize, usize> = BTreeMap::new();
    for g in gts {
        *gt_count.entry(g.class).or_insert(0) += 1;
    }
    for &t in thresholds {
        let m = match_detections(preds, gts, t, true);
        let mut scored: BTreeMap<usize, Vec<(f64, bool)>> = BTreeMap::new();
        for (i, p) in preds.iter().enumerate() {
            scored.entry(p.class).or_default().push((p.confidence, m.pred_to_gt[i].is_some()));
        }
        for c in classes_of(preds, gts) {
            let s = scored.get(&c).map_or(&[][..], Vec::as_slice);
            let ap = average_precision(s, gt_count.get(&c).copied().unwrap_or(0)).unwrap_or(0.0);
            table.entry(c).or_default().push(ap);
        }
    }
    table
}

pub fn map_metrics(preds: &[DetectionRecord], gts: &[DetectionRecord], config: &EvalConfig) -> MetricsReport {
    let aps = ap_table(preds, gts, &IOU_SWEEP);
    let kept: Vec<DetectionRecord> = preds.iter().filter(|p| p.confidence >= config.confidence).cloned().collect();
    let m = match_detections(&kept, gts, config.iou, true);
    let mut classes = Vec::new();
    for c in classes_of(preds, gts) {
        let gt_count = gts.iter().filter(|g| g.class == c).count();
        let tp = kept
            .iter()
            .zip(&m.pred_to_gt)
            .filter(|(p, g)| p.class == c && g.is_some())
            .count();
        let n_pred = kept.iter().filter(|p| p.class == c).count();
        let ap = &aps[&c];
        classes.push(ClassMetrics {
            class: c,
            gt_count,
            ap50: ap[0],
            ap50_95: ap.iter().sum::<f64>() / ap.len() as f64,
            precision: ratio(tp, n_pred),
            recall: ratio(tp, gt_count),
            tp,
            fp: n_pred - tp,
            fn_: gt_count - tp,
        });
    }
    let mean = |f: fn(&ClassMetrics) -> f64| {
        if classes.is_empty() {
            0.0
        } else {
            classes.iter().map(f).sum::<f64>() / classes.len() as f64
        }
    };
    let (tp, fp, fn_) = (m.true_positives(), m.false_positives(), m.false_negatives());
    MetricsReport {
        config: *config,
        map50: mean(|c| c.ap50),
        map50_95: mean(|c| c.ap50_95),
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, gts.len()),
        precision_undefined: kept.is_empty(),
        tp,
        fp,
        fn_,
        classes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub gt_class: usize,
    pub pred_class: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub config: EvalConfig,
    pub matched: usize,
    /// Ground truths no prediction of any class overlaps.
    pub missed: usize,
    /// Unmatched ground truths that some prediction overlaps.
    pub wrong_gt: usize,
    /// Unmatched predictions overlapping a ground truth of another class.
    pub wrong_pred: usize,
    /// Unmatched predictions overlapping no ground truth of another class.
    pub background: usize,
    /// Per ground-truth class: missed, wrong and matched counts.
    pub per_class: BTreeMap<usize, [usize; 3]>,
    /// Wrong detections by (ground-truth class, predicted class).
    pub confusion: Vec<Confusion>,
}

impl FailureReport {
    pub fn confusion_count(&self, gt_class: usize, pred_class: usize) -> usize {
        self.confusion
            .iter()
            .find(|c| c.gt_class == gt_class && c.pred_class == pred_class)
            .map_or(0, |c| c.count)
    }
}

/// Sorts every false negative and false positive of class-aware matching at
/// the configured IoU and confidence into exactly one failure category.
pub fn failure_analysis(preds: &[DetectionRecord], gts: &[DetectionRecord], config: &EvalConfig) -> FailureReport {
    let kept: Vec<&DetectionRecord> = preds.iter().filter(|p| p.confidence >= config.confidence).collect();
    let owned: Vec<DetectionRecord> = kept.iter().map(|p| (*p).clone()).collect();
    let m = match_detections(&owned, gts, config.iou, true);
    let mut per_class: BTreeMap<usize, [usize; 3]> = BTreeMap::new();
    let mut confusion: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let (mut missed, mut wrong_gt, mut wrong_pred, mut background) = (0, 0, 0, 0);
    for (j, g) in gts.iter().enumerate() {
        let slot = per_class.entry(g.class).or_insert([0; 3]);
        if m.gt_to_pred[j].is_some() {
            slot[2] += 1;
            continue;
        }
        // The most-overlapping prediction of any class, ties to the more confident.
        let best = kept
            .iter()
            .filter(|p| p.image == g.image)
            .map(|p| (iou(&p.bbox, &g.bbox), p))
            .filter(|(v, _)| *v >= config.iou)
            .max_by(|a, b| a.0.total_cmp(&b.0).then(a.1.confidence.total_cmp(&b.1.confidence)));
        match best {
            None => {
                missed += 1;
                slot[0] += 1;
            }
            Some((_, p)) => {
                wrong_gt += 1;
                slot[1] += 1;
                *confusion.entry((g.class, p.class)).or_insert(0) += 1;
            }
        }
    }
    for (i, p) in kept.iter().enumerate() {
        if m.pred_to_gt[i].is_some() {
            continue;
        }
        let confused = gts
            .iter()
            .any(|g| g.image == p.image && g.class != p.class && iou(&p.bbox, &g.bbox) >= config.iou);
        if confused {
            wrong_pred += 1;
        } else {
            background += 1;
        }
    }
    FailureReport {
        config: *config,
        matched: m.true_positives(),
        missed,
        wrong_gt,
        wrong_pred,
        background,
        per_class,
        confusion: confusion
            .into_iter()
            .map(|((gt_class, pred_class), count)| Confusion {
                gt_class,
                pred_class,
                count,
            })
            .collect(),
    }
}
