use crate::geometry::Ray;
use crate::math::Vec3;
use crate::sampler::CameraSpec;

/// Pinhole projection shared by both backends and the id pass.
///
/// Pixel coordinates are continuous: pixel `(x, y)` covers `[x, x+1) × [y, y+1)`
/// with `y` growing downwards.
#[derive(Debug, Clone, Copy)]
pub struct Camera {
    pub position: Vec3,
    forward: Vec3,
    right: Vec3,
    up: Vec3,
    tan_half_x: f64,
    tan_half_y: f64,
    pub width: u32,
    pub height: u32,
}

impl Camera {
    pub fn new(spec: &CameraSpec) -> Camera {
        Camera::with_resolution(spec, spec.width, spec.height)
    }

    /// Same view at a different pixel grid (supersampled rasterization).
    pub fn with_resolution(spec: &CameraSpec, width: u32, height: u32) -> Camera {
        let (forward, right, up) = spec.basis();
        let tan_half_x = (spec.fov / 2.0).tan();
        Camera {
            position: spec.position,
            forward,
            right,
            up,
            tan_half_x,
            tan_half_y: tan_half_x * height as f64 / width as f64,
            width,
            height,
        }
    }

    /// Unnormalized direction through a continuous pixel position.
    #[inline]
    pub fn direction(&self, px: f64, py: f64) -> Vec3 {
        let sx = (2.0 * px / self.width as f64 - 1.0) * self.tan_half_x;
        let sy = (1.0 - 2.0 * py / self.height as f64) * self.tan_half_y;
        self.forward + self.right * sx + self.up * sy
    }

    #[inline]
    pub fn ray(&self, px: f64, py: f64) -> Ray {
        Ray::new(self.position, self.direction(px, py))
    }

    /// Camera-space coordinates: `(right, up, depth along forward)`.
    #[inline]
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        let d = p - self.position;
        Vec3::new(d.dot(self.right), d.dot(self.up), d.dot(self.forward))
    }

    /// Continuous pixel position of a camera-space point with positive depth.
    #[inline]
    pub fn project_camera(&self, c: Vec3) -> (f64, f64) {
        let sx = c.x / (c.z * self.tan_half_x);
        let sy = c.y / (c.z * self.tan_half_y);
        (
            (sx + 1.0) * 0.5 * self.width as f64,
            (1.0 - sy) * 0.5 * self.height as f64,
        )
    }
}
