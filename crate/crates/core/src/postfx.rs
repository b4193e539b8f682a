//! Camera-style degradations on the 8-bit image: Gaussian blur and
//! salt-and-pepper noise, each applied with its own probability.

use image::RgbImage;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostFxConfig {
    pub noise_probability: f64,
    /// Fraction of pixels replaced.
    pub noise_amount: [f64; 2],
    pub blur_probability: f64,
    /// Standard deviation in pixels.
    pub blur_sigma: [f64; 2],
}

impl Default for PostFxConfig {
    fn default() -> Self {
        PostFxConfig {
            noise_probability: 0.1,
            noise_amount: [0.005, 0.03],
            blur_probability: 0.1,
            blur_sigma: [0.5, 2.0],
        }
    }
}

impl PostFxConfig {
    pub fn disabled() -> PostFxConfig {
        PostFxConfig {
            noise_probability: 0.0,
            blur_probability: 0.0,
            ..PostFxConfig::default()
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (name, p) in [
            ("postfx.noise_probability", self.noise_probability),
            ("postfx.blur_probability", self.blur_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                errs.push(format!("{name} {p} must lie in [0, 1]"));
            }
        }
        let [a0, a1] = self.noise_amount;
        if !(0.0 <= a0 && a0 <= a1 && a1 <= 1.0) {
            errs.push(format!("postfx.noise_amount {:?} must be ordered within [0, 1]", self.noise_amount));
        }
        let [s0, s1] = self.blur_sigma;
        if !(0.0 < s0 && s0 <= s1 && s1.is_finite()) {
            errs.push(format!("postfx.blur_sigma {:?} must be ordered and positive", self.blur_sigma));
        }
        errs
    }
}

/// What was applied to one image.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PostFxRecord {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub blur_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub noise_amount: Option<f64>,
}

impl PostFxRecord {
    pub fn is_empty(&self) -> bool {
        self.blur_sigma.is_none() && self.noise_amount.is_none()
    }
}

/// Each pixel independently becomes pure black or pure white with
/// probability `amount`.
pub fn salt_pepper<R: Rng + ?Sized>(img: &RgbImage, amount: f64, rng: &mut R) -> RgbImage {
    let mut out = img.clone();
    if amount <= 0.0 {
        return out;
    }
    for px in out.pixels_mut() {
        if rng.random::<f64>() < amount {
            let v = if rng.random::<bool>() { 255 } else { 0 };
            *px = image::Rgb([v; 3]);
        }
    }
    out
}

/// Normalized, sampled Gaussian with radius `ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let k: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.into_iter().map(|v| v / sum).collect()
}

/// Mirror index into `[0, n)`, repeating the edge sample (`c b a | a b c`).
#[inline]
fn reflect(i: i64, n: i64) -> usize {
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Separable blur with reflect padding; channels are independent.
pub fn gaussian_blur(img: &RgbImage, sigma: f64) -> RgbImage {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let src: Vec<f64> = img.as_raw().iter().map(|&v| v as f64).collect();
    let mut tmp = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut acc = 0.0;
                for (j, kv) in k.iter().enumerate() {
                    let sx = reflect(x + j as i64 - r, w);
                    acc += kv * src[((y * w) as usize + sx) * 3 + c];
                }
                tmp[((y * w + x) * 3) as usize + c] = acc;
            }
        }
    }
    let mut out = RgbImage::new(img.width(), img.height());
    let buf: &mut [u8] = &mut out;
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut acc = 0.0;
                for (j, kv) in k.iter().enumerate() {
                    let sy = reflect(y + j as i64 - r, h);
                    acc += kv * tmp[(sy * w as usize + x as usize) * 3 + c];
                }
                buf[((y * w + x) * 3) as usize + c] = acc.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    out
}

#[inline]
fn uniform<R: Rng + ?Sized>(rng: &mut R, r: [f64; 2]) -> f64 {
    r[0] + (r[1] - r[0]) * rng.random::<f64>()
}

/// Decides and applies both effects, blur first.
pub fn apply_postfx<R: Rng + ?Sized>(img: &RgbImage, config: &PostFxConfig, rng: &mut R) -> (RgbImage, PostFxRecord) {
    let noise = rng.random::<f64>() < config.noise_probability;
    let blur = rng.random::<f64>() < config.blur_probability;
    let record = PostFxRecord {
        blur_sigma: blur.then(|| uniform(rng, config.blur_sigma)),
        noise_amount: noise.then(|| uniform(rng, config.noise_amount)),
    };
    let mut out = match record.blur_sigma {
        Some(s) => gaussian_blur(img, s),
        None => img.clone(),
    };
    if let Some(a) = record.noise_amount {
        out = salt_pepper(&out, a, rng);
    }
    (out, record)
}
