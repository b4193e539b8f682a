use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use partgen::dataset::{dataset_stats, load_config, DatasetError, DatasetManifest, GenerationConfig, Generator};
use partgen::eval::{
    check_classes, failure_analysis, failure_text, load_ground_truth, load_predictions, map_metrics, metrics_text,
    EvalConfig, EvaluationReport,
};
use partgen::render::Backend;

use crate::overlay::{draw_boxes, side_by_side};
use crate::Failure;

fn dataset_failure(e: DatasetError) -> Failure {
    if e.is_config_error() {
        Failure::Invalid(e.to_string())
    } else {
        Failure::Runtime(e.to_string())
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure::Invalid("--threads must be >= 1".into()));
        }
        b = b.num_threads(t);
    }
    b.build().map_err(|e| Failure::Runtime(format!("thread pool: {e}")))
}

/// Config file errors of any kind are input errors.
fn load(path: &Path, seed: Option<u64>) -> Result<GenerationConfig, Failure> {
    let mut cfg = load_config(path).map_err(|e| Failure::Invalid(e.to_string()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn revalidate(cfg: &GenerationConfig) -> Result<(), Failure> {
    let errs = cfg.validate();
    if errs.is_empty() {
        Ok(())
    } else {
        Err(dataset_failure(DatasetError::Invalid(errs)))
    }
}

fn absolute(p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        std::env::current_dir().map(|d| d.join(&p)).unwrap_or(p)
    }
}

pub fn generate(
    config: &Path,
    seed: Option<u64>,
    count: Option<usize>,
    output: Option<PathBuf>,
    threads: Option<usize>,
) -> Result<(), Failure> {
    let mut cfg = load(config, seed)?;
    if let Some(n) = count {
        cfg.image_count = n;
    }
    if let Some(o) = output {
        cfg.output_dir = absolute(o);
    }
    revalidate(&cfg)?;
    let pool = pool(threads)?;
    let generator = Generator::new(&cfg).map_err(dataset_failure)?;
    let total = cfg.image_count;
    let step = (total / 20).max(1);
    let done = AtomicUsize::new(0);
    eprintln!(
        "generating {total} images ({}x{}, {}, seed {}) into {}",
        cfg.width,
        cfg.height,
        cfg.render.backend,
        cfg.seed,
        cfg.output_path().display()
    );
    let progress = |_: usize| {
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        if k % step == 0 || k == total {
            eprintln!("[{k}/{total}]");
        }
    };
    let manifest = pool.install(|| generator.generate(&progress)).map_err(dataset_failure)?;
    println!(
        "generated {} images ({} failed) in {}",
        manifest.entries.len(),
        manifest.failures.len(),
        cfg.output_path().display()
    );
    print!("{}", dataset_stats(&manifest).to_text());
    Ok(())
}

/// Class names from a dataset descriptor or a one-name-per-line file.
fn read_names(path: &Path) -> Result<Vec<String>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let yaml = path.extension().is_some_and(|e| e == "yaml" || e == "yml");
    if !yaml {
        return Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect());
    }
    let mut names = Vec::new();
    let mut inside = false;
    for line in text.lines() {
        if line.trim_start() == line {
            inside = line.trim_end() == "names:";
            continue;
        }
        if !inside {
            continue;
        }
        let Some((_, v)) = line.split_once(':') else {
            continue;
        };
        let v = v.trim();
        let name = serde_json::from_str::<String>(v).unwrap_or_else(|_| v.trim_matches('\'').to_string());
        names.push(name);
    }
    Ok(names)
}

pub fn evaluate(
    gt_dir: &Path,
    predictions: &Path,
    iou: f64,
    conf: f64,
    names: Option<&Path>,
    report: &Path,
) -> Result<(), Failure> {
    if !(iou > 0.0 && iou <= 1.0) || !(0.0..=1.0).contains(&conf) {
        return Err(Failure::Invalid(format!("--iou {iou} must lie in (0, 1] and --conf {conf} in [0, 1]")));
    }
    let gt = load_ground_truth(gt_dir).map_err(|e| Failure::Invalid(e.to_string()))?;
    let preds = load_predictions(predictions).map_err(|e| Failure::Invalid(e.to_string()))?;
    let class_names = match names {
        Some(p) => {
            let n = read_names(p)?;
            check_classes(&gt.records, n.len()).map_err(|e| Failure::Invalid(format!("ground truth: {e}")))?;
            check_classes(&preds, n.len()).map_err(|e| Failure::Invalid(format!("predictions: {e}")))?;
            n
        }
        None => Vec::new(),
    };
    let cfg = EvalConfig { iou, confidence: conf };
    let metrics = map_metrics(&preds, &gt.records, &cfg);
    let failures = failure_analysis(&preds, &gt.records, &cfg);
    print!("{}", metrics_text(&metrics, &class_names));
    print!("{}", failure_text(&failures, &class_names));
    let out = EvaluationReport {
        class_names,
        metrics,
        failures,
    };
    let json = serde_json::to_string_pretty(&out).expect("report serializes") + "\n";
    fs::write(report, json).map_err(|e| Failure::Runtime(format!("{}: {e}", report.display())))?;
    println!("report: {}", report.display());
    Ok(())
}

pub fn stats(manifest: &Path, json: bool) -> Result<(), Failure> {
    let m = DatasetManifest::load(manifest).map_err(|e| Failure::Invalid(e.to_string()))?;
    let report = dataset_stats(&m);
    let root = manifest.parent().unwrap_or(Path::new("."));
    let missing = m.missing_files(root);
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("stats serialize"));
    } else {
        print!("{}", report.to_text());
    }
    if missing.is_empty() {
        println!("integrity: ok");
    } else {
        for p in missing.iter().take(10) {
            eprintln!("warning: missing {}", root.join(p).display());
        }
        println!("integrity: {} referenced files missing", missing.len());
    }
    Ok(())
}

fn save(img: &image::RgbImage, path: &Path) -> Result<(), Failure> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

pub fn preview(
    config: &Path,
    seed: Option<u64>,
    index: usize,
    backends: &[Backend],
    output: &Path,
    threads: Option<usize>,
) -> Result<(), Failure> {
    let cfg = load(config, seed)?;
    revalidate(&cfg)?;
    let pool = pool(threads)?;
    let generator = Generator::new(&cfg).map_err(dataset_failure)?;
    fs::create_dir_all(output).map_err(|e| Failure::Runtime(format!("{}: {e}", output.display())))?;
    let stem = format!("{index:06}");
    let mut rgbs = Vec::new();
    for &b in backends {
        let s = pool
            .install(|| generator.sample_image_with(index, b))
            .map_err(dataset_failure)?;
        let p = output.join(format!("{stem}_{b}.png"));
        save(&s.image, &p)?;
        println!("{}", p.display());
        if rgbs.is_empty() {
            let mask = output.join(format!("{stem}_mask.png"));
            partgen::annotate::write_mask_image(&s.ids, &mask).map_err(|e| Failure::Runtime(e.to_string()))?;
            println!("{}", mask.display());
            let ov = output.join(format!("{stem}_overlay.png"));
            save(&draw_boxes(&s.image, &s.labels), &ov)?;
            println!("{}", ov.display());
            println!("{} labels", s.labels.len());
        }
        rgbs.push(s.image);
    }
    if rgbs.len() > 1 {
        let p = output.join(format!("{stem}_side_by_side.png"));
        save(&side_by_side(&rgbs), &p)?;
        println!("{}", p.display());
    }
    Ok(())
}
