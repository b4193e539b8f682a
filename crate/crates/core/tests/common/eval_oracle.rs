//! A deliberately naive evaluator written from the metric definitions alone,
//! sharing no code with `partgen::eval`.

use partgen::eval::{BoxN, DetectionRecord};
use rand::{Rng, RngCore};

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    let lo = if a0 > b0 { a0 } else { b0 };
    let hi = if a1 < b1 { a1 } else { b1 };
    if hi > lo {
        hi - lo
    } else {
        0.0
    }
}

pub fn iou(a: &BoxN, b: &BoxN) -> f64 {
    let (ax0, ax1, ay0, ay1) = (a.cx - a.w / 2.0, a.cx + a.w / 2.0, a.cy - a.h / 2.0, a.cy + a.h / 2.0);
    let (bx0, bx1, by0, by1) = (b.cx - b.w / 2.0, b.cx + b.w / 2.0, b.cy - b.h / 2.0, b.cy + b.h / 2.0);
    let i = overlap(ax0, ax1, bx0, bx1) * overlap(ay0, ay1, by0, by1);
    let u = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - i;
    if u > 0.0 {
        i / u
    } else {
        0.0
    }
}

/// Indices by confidence, highest first; equal confidences in input order.
/// Selection sort, on purpose.
fn greedy_order(preds: &[DetectionRecord]) -> Vec<usize> {
    let mut done = vec![false; preds.len()];
    let mut order = Vec::new();
    for _ in 0..preds.len() {
        let mut pick = None;
        for i in 0..preds.len() {
            if done[i] {
                continue;
            }
            match pick {
                None => pick = Some(i),
                Some(p) if preds[i].confidence > preds[p].confidence => pick = Some(i),
                _ => {}
            }
        }
        let p = pick.unwrap();
        done[p] = true;
        order.push(p);
    }
    order
}

/// `tp[i]` for every prediction under class-aware greedy matching.
pub fn match_tp(preds: &[DetectionRecord], gts: &[DetectionRecord], thr: f64) -> (Vec<bool>, usize) {
    let mut taken = vec![false; gts.len()];
    let mut tp = vec![false; preds.len()];
    for i in greedy_order(preds) {
        let mut best_j = usize::MAX;
        let mut best_v = -1.0;
        for j in 0..gts.len() {
            if taken[j] || gts[j].image != preds[i].image || gts[j].class != preds[i].class {
                continue;
            }
            let v = iou(&preds[i].bbox, &gts[j].bbox);
            if v >= thr && v > best_v {
                best_v = v;
                best_j = j;
            }
        }
        if best_j != usize::MAX {
            taken[best_j] = true;
            tp[i] = true;
        }
    }
    let fn_ = taken.iter().filter(|t| !**t).count();
    (tp, fn_)
}

/// Mean over r = 0, 0.01, .., 1 of the best precision at any rank whose
/// recall reaches r.
pub fn ap(preds: &[DetectionRecord], tp: &[bool], class: usize, n_gt: usize) -> Option<f64> {
    let idx: Vec<usize> = greedy_order(preds).into_iter().filter(|&i| preds[i].class == class).collect();
    if n_gt == 0 {
        return if idx.is_empty() { None } else { Some(0.0) };
    }
    let mut points = Vec::new();
    let mut hits = 0;
    for (rank, &i) in idx.iter().enumerate() {
        if tp[i] {
            hits += 1;
        }
        points.push((hits as f64 / n_gt as f64, hits as f64 / (rank + 1) as f64));
    }
    let mut total = 0.0;
    for step in 0..=100 {
        let r = step as f64 * 0.01;
        let mut best = 0.0;
        for &(rec, prec) in &points {
            if rec >= r - 1e-12 && prec > best {
                best = prec;
            }
        }
        total += best;
    }
    Some(total / 101.0)
}

pub struct OracleMetrics {
    pub map50: f64,
    pub map50_95: f64,
    pub precision: f64,
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

pub fn evaluate(preds: &[DetectionRecord], gts: &[DetectionRecord], iou_thr: f64, conf: f64) -> OracleMetrics {
    let mut classes: Vec<usize> = Vec::new();
    for r in preds.iter().chain(gts.iter()) {
        if !classes.contains(&r.class) {
            classes.push(r.class);
        }
    }
    let mut ap50 = Vec::new();
    let mut ap_all = Vec::new();
    let sweep: Vec<f64> = (0..10).map(|k| 0.5 + 0.05 * k as f64).collect();
    let per_t: Vec<Vec<bool>> = sweep.iter().map(|&t| match_tp(preds, gts, t).0).collect();
    for &c in &classes {
        let n = gts.iter().filter(|g| g.class == c).count();
        let aps: Vec<f64> = per_t.iter().map(|tp| ap(preds, tp, c, n).unwrap_or(0.0)).collect();
        ap50.push(aps[0]);
        ap_all.push(aps.iter().sum::<f64>() / 10.0);
    }
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let kept: Vec<DetectionRecord> = preds.iter().filter(|p| p.confidence >= conf).cloned().collect();
    let (tp_flags, fn_) = match_tp(&kept, gts, iou_thr);
    let tp = tp_flags.iter().filter(|t| **t).count();
    let fp = kept.len() - tp;
    OracleMetrics {
        map50: mean(&ap50),
        map50_95: mean(&ap_all),
        precision: if kept.is_empty() { 0.0 } else { tp as f64 / kept.len() as f64 },
        recall: if gts.is_empty() { 0.0 } else { tp as f64 / gts.len() as f64 },
        tp,
        fp,
        fn_,
    }
}

/// Random instance: up to `max_images` images, up to `max_boxes` boxes each,
/// up to `max_classes` classes. Predictions are perturbed ground truths,
/// sometimes relabelled, plus clutter; confidences are coarse so ties occur.
pub fn random_instance(
    rng: &mut impl RngCore,
    max_classes: usize,
    max_boxes: usize,
    max_images: usize,
) -> (Vec<DetectionRecord>, Vec<DetectionRecord>) {
    let classes = rng.random_range(1..=max_classes);
    let images = rng.random_range(1..=max_images);
    let mut gts = Vec::new();
    let mut preds = Vec::new();
    let rand_box = |rng: &mut dyn RngCore| {
        let w = rng.random_range(0.02..0.4);
        let h = rng.random_range(0.02..0.4);
        BoxN::new(rng.random_range(w / 2.0..1.0 - w / 2.0), rng.random_range(h / 2.0..1.0 - h / 2.0), w, h)
    };
    for im in 0..images {
        let name = format!("img{im}");
        let n = rng.random_range(0..=max_boxes);
        for _ in 0..n {
            let b = rand_box(rng);
            let c = rng.random_range(0..classes);
            gts.push(DetectionRecord::new(name.clone(), c, b, 1.0));
            if rng.random_bool(0.8) {
                let j = 0.08;
                let pb = BoxN::new(
                    b.cx + rng.random_range(-j..j) * b.w,
                    b.cy + rng.random_range(-j..j) * b.h,
                    b.w * rng.random_range(0.8..1.2),
                    b.h * rng.random_range(0.8..1.2),
                );
                let pc = if rng.random_bool(0.15) { rng.random_range(0..classes) } else { c };
                let conf = (rng.random_range(0..=20) as f64) / 20.0;
                preds.push(DetectionRecord::new(name.clone(), pc, pb, conf));
            }
        }
        for _ in 0..rng.random_range(0..=3) {
            let b = rand_box(rng);
            let conf = (rng.random_range(0..=20) as f64) / 20.0;
            preds.push(DetectionRecord::new(name.clone(), rng.random_range(0..classes), b, conf));
        }
    }
    (preds, gts)
}
