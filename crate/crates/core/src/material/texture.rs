use std::path::Path;

use crate::math::{Color, Vec3};

use super::MaterialError;

/// Decoded, linear-RGB texture.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureImage {
    width: u32,
    height: u32,
    texels: Vec<Color>,
}

/// sRGB transfer function, encoded value in `[0,1]` to linear.
#[inline]
pub fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// Inverse of [`srgb_to_linear`].
#[inline]
pub fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        c * 12.92
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

impl TextureImage {
    pub fn new(width: u32, height: u32, texels: Vec<Color>) -> Result<TextureImage, MaterialError> {
        if width == 0 || height == 0 || texels.len() != (width as usize) * (height as usize) {
            return Err(MaterialError::InvalidTexture(format!(
                "{width}x{height} texture with {} texels",
                texels.len()
            )));
        }
        if texels
            .iter()
            .any(|t| !t.is_finite() || t.min_component() < 0.0 || t.max_component() > 1.0)
        {
            return Err(MaterialError::InvalidTexture("texel outside [0,1]".into()));
        }
        Ok(TextureImage {
            width,
            height,
            texels,
        })
    }

    pub fn constant(color: Color) -> TextureImage {
        TextureImage {
            width: 1,
            height: 1,
            texels: vec![color],
        }
    }

    /// Decodes 8-bit sRGB to linear.
    pub fn from_rgb8(img: &image::RgbImage) -> TextureImage {
        let lut: Vec<f64> = (0..256).map(|i| srgb_to_linear(i as f64 / 255.0)).collect();
        let texels = img
            .pixels()
            .map(|p| Vec3::new(lut[p[0] as usize], lut[p[1] as usize], lut[p[2] as usize]))
            .collect();
        TextureImage {
            width: img.width(),
            height: img.height(),
            texels,
        }
    }

    /// Loads a PNG/JPEG colour texture. `srgb` selects decoding of the
    /// transfer curve (colour maps) versus raw values (data maps).
    pub fn load(path: &Path, srgb: bool) -> Result<TextureImage, MaterialError> {
        let img = image::open(path)
            .map_err(|e| MaterialError::Image {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?
            .to_rgb8();
        if srgb {
            Ok(TextureImage::from_rgb8(&img))
        } else {
            let texels = img
                .pixels()
                .map(|p| Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64) / 255.0)
                .collect();
            Ok(TextureImage {
                width: img.width(),
                height: img.height(),
                texels,
            })
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn texel(&self, x: u32, y: u32) -> Color {
        self.texels[(y * self.width + x) as usize]
    }

    pub fn mean(&self) -> Color {
        self.texels.iter().fold(Vec3::ZERO, |a, &t| a + t) / self.texels.len() as f64
    }

    /// Bilinear lookup with wraparound; `(u, v)` in texture repeats.
    pub fn sample_bilinear(&self, u: f64, v: f64) -> Color {
        if self.texels.len() == 1 {
            return self.texels[0];
        }
        let (w, h) = (self.width as i64, self.height as i64);
        let x = u.rem_euclid(1.0) * w as f64 - 0.5;
        let y = v.rem_euclid(1.0) * h as f64 - 0.5;
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let wrap = |i: i64, n: i64| i.rem_euclid(n) as u32;
        let (x0, y0) = (x0 as i64, y0 as i64);
        let (xa, xb) = (wrap(x0, w), wrap(x0 + 1, w));
        let (ya, yb) = (wrap(y0, h), wrap(y0 + 1, h));
        let top = self.texel(xa, ya).lerp(self.texel(xb, ya), fx);
        let bottom = self.texel(xa, yb).lerp(self.texel(xb, yb), fx);
        top.lerp(bottom, fy)
    }
}

/// Blend of the yz, xz and xy planar projections weighted by the absolute
/// normal components. `tiling` is the world size (m) of one texture repeat.
pub fn triplanar_lookup(texture: &TextureImage, point: Vec3, normal: Vec3, tiling: f64) -> Color {
    debug_assert!(tiling > 0.0);
    let w = normal.abs();
    let sum = w.x + w.y + w.z;
    let w = if sum > 0.0 { w / sum } else { Vec3::new(0.0, 0.0, 1.0) };
    let p = point / tiling;
    let mut c = Vec3::ZERO;
    if w.x > 0.0 {
        c += texture.sample_bilinear(p.y, p.z) * w.x;
    }
    if w.y > 0.0 {
        c += texture.sample_bilinear(p.x, p.z) * w.y;
    }
    if w.z > 0.0 {
        c += texture.sample_bilinear(p.x, p.y) * w.z;
    }
    c
}
