use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CUBE: &str = "v 0 0 0\nv 0.2 0 0\nv 0.2 0.2 0\nv 0 0.2 0\nv 0 0 0.2\nv 0.2 0 0.2\nv 0.2 0.2 0.2\nv 0 0.2 0.2\n\
f 1 3 2\nf 1 4 3\nf 5 6 7\nf 5 7 8\nf 1 2 6\nf 1 6 5\nf 2 3 7\nf 2 7 6\nf 3 4 8\nf 3 8 7\nf 4 1 5\nf 4 5 8\n";
const WEDGE: &str = "v 0 0 0\nv 0.3 0 0\nv 0 0.2 0\nv 0 0 0.15\nf 1 3 2\nf 1 2 4\nf 2 3 4\nf 3 1 4\n";

fn partgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_partgen"))
        .args(args)
        .env("PARTGEN_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Config with two categories, rasterized 64×64, solid textures.
fn write_config(dir: &Path, count: usize, extra: &str) -> PathBuf {
    fs::write(dir.join("cube.obj"), CUBE).unwrap();
    fs::write(dir.join("wedge.obj"), WEDGE).unwrap();
    let text = format!(
        r#"{{
  "catalog": {{"categories": [{{"name": "hook", "mesh": "cube.obj"}}, {{"name": "plug", "mesh": "wedge.obj"}}]}},
  "output_dir": "out",
  "image_count": {count},
  "width": 64,
  "height": 64,
  "render": {{"backend": "rasterized"}},
  "sampler": {{"textures": {{"solid": 1, "image": 0, "pbr": 0}}, "objects": {{"max_count": 4}}}},
  "seed": 5{extra}
}}"#
    );
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn count_files(dir: &Path, ext: &str) -> usize {
    fs::read_dir(dir)
        .map(|rd| rd.filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == ext)).count())
        .unwrap_or(0)
}

#[test]
fn generate_writes_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 5, "");
    let o = partgen(&["generate", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let images = count_files(&out.join("images/train"), "png") + count_files(&out.join("images/val"), "png");
    let labels = count_files(&out.join("labels/train"), "txt") + count_files(&out.join("labels/val"), "txt");
    assert_eq!((images, labels), (5, 5));
    assert_eq!(count_files(&out.join("masks"), "png"), 5);
    assert!(out.join("manifest.json").is_file() && out.join("dataset.yaml").is_file());
    assert!(stdout(&o).contains("generated 5 images (0 failed)"));
}

#[test]
fn missing_mesh_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 2, "");
    fs::remove_file(dir.path().join("wedge.obj")).unwrap();
    let o = partgen(&["generate", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("wedge.obj"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn misspelled_key_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 1, r#", "cammera": {}"#);
    let o = partgen(&["generate", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cammera"));
}

#[test]
fn overrides_reach_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 5, "");
    let out = dir.path().join("elsewhere");
    let o = partgen(&["generate", s(&cfg), "--seed", "99", "--count", "2", "--output", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 99);
    assert_eq!(m["entries"].as_array().unwrap().len(), 2);
}

#[test]
fn evaluate_perfect_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt");
    let pred = dir.path().join("pred");
    fs::create_dir_all(&gt).unwrap();
    fs::create_dir_all(&pred).unwrap();
    fs::write(gt.join("a.txt"), "0 0.3 0.3 0.2 0.2\n1 0.7 0.7 0.2 0.3\n").unwrap();
    fs::write(gt.join("b.txt"), "1 0.5 0.5 0.4 0.4\n").unwrap();
    fs::write(pred.join("a.txt"), "0 0.3 0.3 0.2 0.2 1.0\n1 0.7 0.7 0.2 0.3 1.0\n").unwrap();
    fs::write(pred.join("b.txt"), "1 0.5 0.5 0.4 0.4 1.0\n").unwrap();
    let names = dir.path().join("names.txt");
    fs::write(&names, "hook\nplug\n").unwrap();
    let report = dir.path().join("r.json");
    let o = partgen(&["evaluate", s(&gt), s(&pred), "--names", s(&names), "--report", s(&report)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("IoU=0.60 conf=0.50\n"), "{out}");
    let rows: Vec<&str> = out.lines().skip(2).take(3).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r.matches("100.0").count(), 4, "{r}");
    }
    let j: serde_json::Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(j["metrics"]["map50"], 1.0);
    assert_eq!(j["class_names"][1], "plug");
}

#[test]
fn evaluate_bad_line_names_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt");
    fs::create_dir_all(&gt).unwrap();
    fs::write(gt.join("a.txt"), "0 0.3 0.3 0.2 0.2\n").unwrap();
    let preds = dir.path().join("preds.txt");
    fs::write(&preds, "a 0 0.3 0.3 0.2 0.2 0.9\na 0 0.3 oops 0.2 0.2 0.9\n").unwrap();
    let o = partgen(&["evaluate", s(&gt), s(&preds), "--report", s(&dir.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("preds.txt:2") && e.contains("cy"), "{e}");
}

#[test]
fn stats_counts_and_integrity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 4, "");
    assert!(partgen(&["generate", s(&cfg)]).status.success());
    let manifest = dir.path().join("out/manifest.json");
    let o = partgen(&["stats", s(&manifest), "--json"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let json_end = text.rfind('}').unwrap();
    let j: serde_json::Value = serde_json::from_str(&text[..=json_end]).unwrap();
    // Count labels by class directly from the files.
    let mut counts = [0u64; 2];
    for split in ["train", "val"] {
        for e in fs::read_dir(dir.path().join("out/labels").join(split)).unwrap() {
            for l in fs::read_to_string(e.unwrap().path()).unwrap().lines() {
                counts[l.split(' ').next().unwrap().parse::<usize>().unwrap()] += 1;
            }
        }
    }
    assert_eq!(j["classes"][0]["instances"], counts[0]);
    assert_eq!(j["classes"][1]["instances"], counts[1]);
    assert!(text.contains("integrity: ok"));

    // Remove one referenced file: still exit 0, flagged.
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    let img = m["entries"][0]["image"].as_str().unwrap();
    fs::remove_file(dir.path().join("out").join(img)).unwrap();
    let o = partgen(&["stats", s(&manifest)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("integrity: 1 referenced files missing"));
    assert!(stderr(&o).contains("warning: missing"));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(partgen(&["stats", s(&bad)]).status.code(), Some(1));
    assert_eq!(partgen(&["stats", s(&dir.path().join("nope.json"))]).status.code(), Some(1));
}

#[test]
fn stats_of_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("manifest.json");
    fs::write(
        &p,
        r#"{"seed": 0, "image_count": 0, "width": 64, "height": 64, "categories": ["hook"], "config_digest": "", "entries": []}"#,
    )
    .unwrap();
    let o = partgen(&["stats", s(&p)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("images: 0 (train 0, val 0), failed: 0"));
    assert!(out.lines().any(|l| l.starts_with("hook") && l.split_whitespace().skip(1).all(|v| v == "0")));
}

#[test]
fn preview_both_backends() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 3, "");
    let text = fs::read_to_string(&cfg).unwrap().replace(r#""backend": "rasterized""#, r#""backend": "rasterized", "samples_per_pixel": 4"#);
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("pv");
    let o = partgen(&["preview", s(&cfg), "--image-index", "2", "--output", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["000002_path_traced.png", "000002_rasterized.png", "000002_mask.png", "000002_overlay.png", "000002_side_by_side.png"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert_eq!(count_files(&out, "png"), 5);
    let first = fs::read(out.join("000002_path_traced.png")).unwrap();
    let o = partgen(&["preview", s(&cfg), "--image-index", "2", "--output", s(&out), "--backend", "path-traced"]);
    assert!(o.status.success());
    assert_eq!(fs::read(out.join("000002_path_traced.png")).unwrap(), first);
}

#[test]
fn preview_matches_full_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 4, "");
    assert!(partgen(&["generate", s(&cfg)]).status.success());
    let pv = dir.path().join("pv");
    let o = partgen(&["preview", s(&cfg), "--image-index", "3", "--backend", "rasterized", "--output", s(&pv)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    let e = &m["entries"][3];
    assert_eq!(e["index"], 3);
    let run = fs::read(dir.path().join("out").join(e["image"].as_str().unwrap())).unwrap();
    assert_eq!(fs::read(pv.join("000003_rasterized.png")).unwrap(), run);
    let mask = fs::read(dir.path().join("out").join(e["mask"].as_str().unwrap())).unwrap();
    assert_eq!(fs::read(pv.join("000003_mask.png")).unwrap(), mask);
}
