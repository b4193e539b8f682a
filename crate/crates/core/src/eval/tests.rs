use std::fs;

use proptest::prelude::*;

use super::*;

fn rec(image: &str, class: usize, cx: f64, cy: f64, w: f64, h: f64, conf: f64) -> DetectionRecord {
    DetectionRecord::new(image, class, BoxN::new(cx, cy, w, h), conf)
}

#[test]
fn iou_examples() {
    let a = BoxN::new(0.5, 0.5, 0.2, 0.2);
    assert_eq!(iou(&a, &a), 1.0);
    assert_eq!(iou(&a, &BoxN::new(0.9, 0.9, 0.1, 0.1)), 0.0);
    // Corner boxes (0,0)-(2,2) and (1,1)-(3,3): overlap 1, union 4 + 4 - 1.
    let p = BoxN::from_corners(0.0, 0.0, 2.0, 2.0);
    let q = BoxN::from_corners(1.0, 1.0, 3.0, 3.0);
    assert!((iou(&p, &q) - 1.0 / 7.0).abs() < 1e-12);
}

#[test]
fn loading_formats() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt");
    fs::create_dir(&gt).unwrap();
    fs::write(gt.join("a.txt"), "0 0.5 0.5 0.2 0.2\n").unwrap();
    fs::write(gt.join("b.txt"), "").unwrap();
    let g = load_ground_truth(&gt).unwrap();
    assert_eq!(g.images, ["a", "b"]);
    assert_eq!(g.records.len(), 1);
    assert_eq!(g.records[0].confidence, 1.0);

    let pd = dir.path().join("pred");
    fs::create_dir(&pd).unwrap();
    fs::write(pd.join("a.txt"), "1 0.5 0.5 0.2 0.2 0.93\n").unwrap();
    let p = load_predictions(&pd).unwrap();
    assert_eq!(p, vec![rec("a", 1, 0.5, 0.5, 0.2, 0.2, 0.93)]);

    let single = dir.path().join("preds.txt");
    fs::write(&single, "# image class cx cy w h conf\na 1 0.5 0.5 0.2 0.2 0.93\n").unwrap();
    assert_eq!(load_predictions(&single).unwrap(), p);

    fs::write(pd.join("c.txt"), "0 0.5 0.5 1.2 0.2 0.9\n").unwrap();
    let err = load_predictions(&pd).unwrap_err().to_string();
    assert!(err.contains("c.txt:1") && err.contains("w 1.2"), "{err}");
    fs::write(pd.join("c.txt"), "0 0.5 0.5 0.2 0.2\n").unwrap();
    assert!(load_predictions(&pd).unwrap_err().to_string().contains("expected 6 fields"));
}

#[test]
fn matching_examples() {
    let g = vec![rec("i", 0, 0.5, 0.5, 0.2, 0.2, 1.0)];
    let m = match_detections(&g, &g, 0.5, true);
    assert_eq!((m.true_positives(), m.false_positives(), m.false_negatives()), (1, 0, 0));
    let preds = vec![rec("i", 0, 0.5, 0.5, 0.2, 0.2, 0.6), rec("i", 0, 0.51, 0.5, 0.2, 0.2, 0.9)];
    let m = match_detections(&preds, &g, 0.5, true);
    assert_eq!(m.pred_to_gt, vec![None, Some(0)]);
    // Wrong class never matches class-aware, but does class-agnostic.
    let other = vec![rec("i", 1, 0.5, 0.5, 0.2, 0.2, 0.9)];
    assert_eq!(match_detections(&other, &g, 0.5, true).true_positives(), 0);
    assert_eq!(match_detections(&other, &g, 0.5, false).true_positives(), 1);
    // Different image never matches.
    assert_eq!(match_detections(&[rec("j", 0, 0.5, 0.5, 0.2, 0.2, 0.9)], &g, 0.5, true).true_positives(), 0);
}

#[test]
fn ap_examples() {
    assert_eq!(average_precision(&[(0.9, true)], 1), Some(1.0));
    assert_eq!(average_precision(&[(0.9, true), (0.8, false)], 1), Some(1.0));
    assert_eq!(average_precision(&[(0.9, false)], 0), Some(0.0));
    assert_eq!(average_precision(&[], 0), None);
    assert_eq!(average_precision(&[], 3), Some(0.0));
    // [FP, TP] on one gt: precision 1/2 at every recall level.
    assert_eq!(average_precision(&[(0.9, false), (0.8, true)], 1), Some(0.5));
    // Two gts, one found first: recall 0.5 reached at precision 1, rest 0.
    // Points r = 0.00..0.50 (51 of them) score 1.
    assert!((average_precision(&[(0.9, true)], 2).unwrap() - 51.0 / 101.0).abs() < 1e-15);
}

#[test]
fn perfect_predictions_score_one() {
    let gts: Vec<_> = (0..6)
        .map(|i| rec(&format!("im{}", i % 3), i % 2, 0.2 + 0.1 * i as f64, 0.5, 0.1, 0.2, 1.0))
        .collect();
    let r = map_metrics(&gts, &gts, &EvalConfig::default());
    assert_eq!((r.map50, r.map50_95, r.precision, r.recall), (1.0, 1.0, 1.0, 1.0));
    assert!(r.classes.iter().all(|c| c.ap50 == 1.0 && c.ap50_95 == 1.0 && c.fp == 0 && c.fn_ == 0));
    assert_eq!((r.tp, r.fp, r.fn_), (6, 0, 0));
    let text = metrics_text(&r, &["a".into(), "b".into()]);
    assert!(text.starts_with("IoU=0.60 conf=0.50\n"));
    assert!(text.lines().skip(2).all(|l| l.matches("100.0").count() == 4), "{text}");
}

#[test]
fn no_predictions_convention() {
    let gts = vec![rec("i", 0, 0.5, 0.5, 0.2, 0.2, 1.0)];
    let r = map_metrics(&[], &gts, &EvalConfig::default());
    assert_eq!((r.precision, r.recall, r.map50, r.map50_95), (0.0, 0.0, 0.0, 0.0));
    assert!(r.precision_undefined);
    assert_eq!(r.fn_, 1);
}

#[test]
fn confidence_threshold_only_affects_p_and_r() {
    let gts = vec![rec("i", 0, 0.5, 0.5, 0.2, 0.2, 1.0)];
    let preds = vec![rec("i", 0, 0.5, 0.5, 0.2, 0.2, 0.3)];
    let r = map_metrics(&preds, &gts, &EvalConfig::default());
    assert_eq!(r.map50, 1.0);
    assert_eq!((r.recall, r.tp), (0.0, 0));
}

#[test]
fn failure_taxonomy() {
    let gear1 = 5;
    let gear2 = 6;
    let gts = vec![
        rec("a", gear1, 0.3, 0.3, 0.2, 0.2, 1.0),
        rec("a", 0, 0.8, 0.8, 0.1, 0.1, 1.0),
        rec("b", 1, 0.5, 0.5, 0.3, 0.3, 1.0),
    ];
    let preds = vec![
        // gear1 seen as gear2 at IoU ~0.8.
        rec("a", gear2, 0.31, 0.31, 0.2, 0.2, 0.9),
        // Nothing near the class-0 object; one stray box elsewhere.
        rec("a", 0, 0.1, 0.9, 0.05, 0.05, 0.7),
        rec("b", 1, 0.5, 0.5, 0.3, 0.3, 0.95),
    ];
    let cfg = EvalConfig::default();
    let f = failure_analysis(&preds, &gts, &cfg);
    assert_eq!(f.confusion_count(gear1, gear2), 1);
    assert_eq!((f.matched, f.missed, f.wrong_gt, f.wrong_pred, f.background), (1, 1, 1, 1, 1));
    assert_eq!(f.per_class[&gear1], [0, 1, 0]);
    assert_eq!(f.per_class[&0], [1, 0, 0]);
    let m = map_metrics(&preds, &gts, &cfg);
    assert_eq!(m.fn_, f.missed + f.wrong_gt);
    assert_eq!(m.fp, f.wrong_pred + f.background);
    let names: Vec<String> = ["hook", "plug", "x", "y", "z", "gear1", "gear2"].map(String::from).to_vec();
    assert!(failure_text(&f, &names).contains("gear1 -> gear2: 1"));
}

fn arb_box() -> impl Strategy<Value = BoxN> {
    (0.05f64..0.95, 0.05f64..0.95, 0.01f64..0.5, 0.01f64..0.5).prop_map(|(x, y, w, h)| BoxN::new(x, y, w, h))
}

fn arb_records(conf: bool) -> impl Strategy<Value = Vec<DetectionRecord>> {
    prop::collection::vec((0usize..3, 0usize..3, arb_box(), 0.0f64..1.0), 0..12).prop_map(move |v| {
        v.into_iter()
            .map(|(im, c, b, p)| DetectionRecord::new(format!("{im}"), c, b, if conf { p } else { 1.0 }))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn prop_iou_symmetric_bounded(a in arb_box(), b in arb_box()) {
        let (x, y) = (iou(&a, &b), iou(&b, &a));
        prop_assert!((x - y).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn prop_ap_monotone(flags in prop::collection::vec(any::<bool>(), 0..15), extra in 0usize..4) {
        let gt = flags.iter().filter(|f| **f).count() + extra;
        prop_assume!(gt > 0);
        let scored: Vec<(f64, bool)> = flags.iter().enumerate().map(|(i, &f)| (1.0 - i as f64 * 0.01, f)).collect();
        let base = average_precision(&scored, gt).unwrap();
        let mut fp = scored.clone();
        fp.push((0.0, false));
        prop_assert!(average_precision(&fp, gt).unwrap() <= base + 1e-15);
        if extra > 0 {
            // Turning a missing ground truth into a lowest-ranked TP.
            let mut tp = scored.clone();
            tp.push((0.0, true));
            prop_assert!(average_precision(&tp, gt).unwrap() >= base - 1e-15);
        }
    }

    #[test]
    fn prop_failures_partition(preds in arb_records(true), gts in arb_records(false)) {
        let cfg = EvalConfig::default();
        let f = failure_analysis(&preds, &gts, &cfg);
        let m = map_metrics(&preds, &gts, &cfg);
        prop_assert_eq!(f.missed + f.wrong_gt + f.matched, gts.len());
        prop_assert_eq!(f.wrong_pred + f.background, m.fp);
        for c in &m.classes {
            let [mi, wr, tp] = f.per_class.get(&c.class).copied().unwrap_or([0; 3]);
            prop_assert_eq!(mi + wr + tp, c.gt_count);
            prop_assert_eq!(tp + c.fn_, c.gt_count);
            prop_assert!((0.0..=1.0).contains(&c.ap50) && (0.0..=1.0).contains(&c.ap50_95));
        }
        prop_assert!((0.0..=1.0).contains(&m.precision) && (0.0..=1.0).contains(&m.recall));
    }
}
