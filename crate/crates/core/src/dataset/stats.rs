use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::material::TextureMode;

use super::DatasetManifest;

/// Equal-width bins over `[edges[0], edges[n]]`, the last bin closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Histogram {
        let step = (hi - lo) / bins as f64;
        Histogram {
            edges: (0..=bins).map(|i| lo + step * i as f64).collect(),
            counts: vec![0; bins],
        }
    }

    pub fn add(&mut self, v: f64) {
        let n = self.counts.len();
        let (lo, hi) = (self.edges[0], self.edges[n]);
        if n == 0 || !(lo..=hi).contains(&v) {
            return;
        }
        let i = if hi > lo { (((v - lo) / (hi - lo)) * n as f64) as usize } else { 0 };
        self.counts[i.min(n - 1)] += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCount {
    pub name: String,
    /// Labelled instances.
    pub instances: usize,
    /// Images with at least one label of this class.
    pub images: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub images: usize,
    pub failed: usize,
    pub train: usize,
    pub val: usize,
    pub classes: Vec<ClassCount>,
    /// Labels per image → number of images.
    pub objects_per_image: BTreeMap<usize, usize>,
    pub noise_rate: f64,
    pub blur_rate: f64,
    /// Texture mode → number of target instances.
    pub texture_modes: BTreeMap<TextureMode, usize>,
    pub camera_r: Histogram,
    pub camera_theta_deg: Histogram,
}

const R_BINS: usize = 10;
const THETA_BINS: usize = 9;

pub fn dataset_stats(manifest: &DatasetManifest) -> StatsReport {
    let n = manifest.entries.len();
    let mut classes: Vec<ClassCount> = manifest
        .categories
        .iter()
        .map(|name| ClassCount {
            name: name.clone(),
            instances: 0,
            images: 0,
        })
        .collect();
    let mut objects_per_image = BTreeMap::new();
    let mut texture_modes = BTreeMap::new();
    let (mut noise, mut blur) = (0usize, 0usize);
    let rs: Vec<f64> = manifest.entries.iter().map(|e| e.scene.camera.r).collect();
    let (r_lo, r_hi) = rs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
    let mut camera_r = if n == 0 { Histogram::new(0.0, 0.0, R_BINS) } else { Histogram::new(r_lo, r_hi, R_BINS) };
    let mut camera_theta_deg = Histogram::new(0.0, 90.0, THETA_BINS);
    for e in &manifest.entries {
        *objects_per_image.entry(e.label_count).or_insert(0) += 1;
        noise += e.postfx.noise_amount.is_some() as usize;
        blur += e.postfx.blur_sigma.is_some() as usize;
        let mut seen = vec![false; classes.len()];
        for t in e.scene.targets() {
            *texture_modes.entry(t.material.mode).or_insert(0) += 1;
            if let (Some(c), Some(_)) = (t.class, t.bbox) {
                if let Some(cc) = classes.get_mut(c) {
                    cc.instances += 1;
                    seen[c] = true;
                }
            }
        }
        for (cc, s) in classes.iter_mut().zip(seen) {
            cc.images += s as usize;
        }
        camera_r.add(e.scene.camera.r);
        camera_theta_deg.add(e.scene.camera.theta_deg);
    }
    let rate = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    StatsReport {
        images: n,
        failed: manifest.failures.len(),
        train: manifest.split_count(super::Split::Train),
        val: manifest.split_count(super::Split::Val),
        classes,
        objects_per_image,
        noise_rate: rate(noise),
        blur_rate: rate(blur),
        texture_modes,
        camera_r,
        camera_theta_deg,
    }
}

impl StatsReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "images: {} (train {}, val {}), failed: {}",
            self.images, self.train, self.val, self.failed
        );
        let w = self.classes.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let _ = writeln!(s, "{:<w$}  {:>9}  {:>7}", "class", "instances", "images");
        for c in &self.classes {
            let _ = writeln!(s, "{:<w$}  {:>9}  {:>7}", c.name, c.instances, c.images);
        }
        let _ = writeln!(s, "objects per image:");
        for (k, v) in &self.objects_per_image {
            let _ = writeln!(s, "  {k:>3}: {v}");
        }
        let _ = writeln!(s, "postfx: noise {:.4}, blur {:.4}", self.noise_rate, self.blur_rate);
        let _ = writeln!(s, "texture modes:");
        for (k, v) in &self.texture_modes {
            let _ = writeln!(s, "  {:<6} {v}", format!("{k:?}").to_lowercase());
        }
        for (name, h) in [("camera r (m)", &self.camera_r), ("camera theta (deg)", &self.camera_theta_deg)] {
            let _ = writeln!(s, "{name}:");
            for (i, c) in h.counts.iter().enumerate() {
                let _ = writeln!(s, "  [{:>8.3}, {:>8.3}] {c}", h.edges[i], h.edges[i + 1]);
            }
        }
        s
    }
}
