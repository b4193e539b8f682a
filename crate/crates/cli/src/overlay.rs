use image::{Rgb, RgbImage};
use partgen::annotate::YoloRecord;

const PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
];

/// Copies `img` with a 2-pixel outline around every label box.
pub fn draw_boxes(img: &RgbImage, labels: &[YoloRecord]) -> RgbImage {
    let mut out = img.clone();
    let (w, h) = img.dimensions();
    for r in labels {
        let b = r.to_pixel_box(w, h);
        let c = Rgb(PALETTE[r.class % PALETTE.len()]);
        let (x1, y1) = (b.x_max.min(w - 1), b.y_max.min(h - 1));
        for t in 0..2u32 {
            for x in b.x_min..=x1 {
                for y in [b.y_min + t, y1.saturating_sub(t)] {
                    if y < h {
                        out.put_pixel(x, y, c);
                    }
                }
            }
            for y in b.y_min..=y1 {
                for x in [b.x_min + t, x1.saturating_sub(t)] {
                    if x < w {
                        out.put_pixel(x, y, c);
                    }
                }
            }
        }
    }
    out
}

/// Images left to right, top-aligned.
pub fn side_by_side(images: &[RgbImage]) -> RgbImage {
    let w = images.iter().map(|i| i.width()).sum();
    let h = images.iter().map(|i| i.height()).max().unwrap_or(0);
    let mut out = RgbImage::new(w, h);
    let mut x0 = 0;
    for img in images {
        image::imageops::replace(&mut out, img, x0 as i64, 0);
        x0 += img.width();
    }
    out
}
