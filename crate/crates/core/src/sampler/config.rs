use serde::{Deserialize, Serialize};

/// Target object quantity and pose randomization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectConfig {
    /// Objects per image are drawn uniformly from `0..=max_count`.
    pub max_count: usize,
    /// Per-axis rotation clamp in degrees; rotation is uniform in `[-c, c]`.
    pub rotation_limits_deg: [f64; 3],
    /// Side of the square placement region, in multiples of
    /// `sqrt(n) * mean object diagonal`.
    pub placement_spread: f64,
    pub max_attempts: usize,
}

impl Default for ObjectConfig {
    fn default() -> Self {
        ObjectConfig {
            max_count: 10,
            rotation_limits_deg: [180.0; 3],
            placement_spread: 3.0,
            max_attempts: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraConfig {
    /// Radius range as multiples of the full-coverage radius
    /// `(d/2) / tan(fov_min/2)`, `d` the objects-area diagonal.
    pub radius_factor: [f64; 2],
    /// Polar angle range from the vertical, degrees.
    pub theta_deg: [f64; 2],
    /// Azimuth range, degrees; the upper bound is exclusive.
    pub phi_deg: [f64; 2],
    pub focal_length_mm: [f64; 2],
    pub sensor_width_mm: f64,
    /// Per-axis look-at shift bound as a fraction of the objects-area diagonal.
    pub focus_shift: [f64; 3],
}

impl Default for CameraConfig {
    fn default() -> Self {
        CameraConfig {
            radius_factor: [0.9, 1.8],
            theta_deg: [5.0, 85.0],
            phi_deg: [0.0, 360.0],
            focal_length_mm: [30.0, 60.0],
            sensor_width_mm: 36.0,
            focus_shift: [0.1, 0.1, 0.05],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneBoxConfig {
    /// Ground side = `max(objects-area diagonal, 2 r_max) * margin`.
    pub margin: f64,
}

impl Default for SceneBoxConfig {
    fn default() -> Self {
        SceneBoxConfig { margin: 1.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LightConfig {
    /// One light per this much ground area (m²), rounded up.
    pub reference_area_m2: f64,
    pub max_count: usize,
    /// Power range (W) at the reference area; scaled by ground area / reference.
    pub power_w: [f64; 2],
    /// Light height as a fraction of the wall height.
    pub height_fraction: [f64; 2],
    pub max_tilt_deg: f64,
    /// Half-extent range as a fraction of the ground side.
    pub size_fraction: [f64; 2],
    /// Lower bound of each colour channel.
    pub min_channel: f64,
}

impl Default for LightConfig {
    fn default() -> Self {
        LightConfig {
            reference_area_m2: 25.0,
            max_count: 6,
            power_w: [50.0, 500.0],
            height_fraction: [0.5, 1.0],
            max_tilt_deg: 30.0,
            size_fraction: [0.02, 0.06],
            min_channel: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistractorConfig {
    pub max_count: usize,
    /// Size range relative to the mean target diagonal.
    pub scale_range: [f64; 2],
    /// Reference size (m) when a scene has no targets.
    pub fallback_size_m: f64,
    pub max_attempts: usize,
}

impl Default for DistractorConfig {
    fn default() -> Self {
        DistractorConfig {
            max_count: 8,
            scale_range: [0.3, 1.5],
            fallback_size_m: 0.2,
            max_attempts: 50,
        }
    }
}

/// Probabilities of each texture mode; must sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TexturePolicy {
    pub solid: f64,
    pub image: f64,
    pub pbr: f64,
    /// PBR restricted to metallic library entries.
    pub pbr_metal: f64,
    /// Uniform ± jitter added to library metalness/roughness.
    pub pbr_jitter: f64,
    /// World size (m) of one texture repeat on objects.
    pub tiling_m: f64,
}

impl Default for TexturePolicy {
    fn default() -> Self {
        TexturePolicy {
            solid: 1.0 / 3.0,
            image: 1.0 / 3.0,
            pbr: 1.0 / 3.0,
            pbr_metal: 0.0,
            pbr_jitter: 0.0,
            tiling_m: crate::material::DEFAULT_TILING,
        }
    }
}

impl TexturePolicy {
    pub fn only(mode: &str) -> TexturePolicy {
        let mut p = TexturePolicy {
            solid: 0.0,
            image: 0.0,
            pbr: 0.0,
            pbr_metal: 0.0,
            ..TexturePolicy::default()
        };
        match mode {
            "solid" => p.solid = 1.0,
            "image" => p.image = 1.0,
            "pbr" => p.pbr = 1.0,
            "pbr_metal" => p.pbr_metal = 1.0,
            other => panic!("unknown texture mode {other}"),
        }
        p
    }

    pub fn total(&self) -> f64 {
        self.solid + self.image + self.pbr + self.pbr_metal
    }
}

/// Every domain-randomization range in one place.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub objects: ObjectConfig,
    pub camera: CameraConfig,
    pub scene: SceneBoxConfig,
    pub lights: LightConfig,
    pub distractors: DistractorConfig,
    pub textures: TexturePolicy,
}

impl SamplerConfig {
    /// Range and consistency checks; every violation is reported.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut range = |name: &str, r: [f64; 2], lo: f64, hi: f64| {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1] && r[0] >= lo && r[1] <= hi) {
                errs.push(format!("{name}: range {r:?} must be ordered within [{lo}, {hi}]"));
            }
        };
        let c = &self.camera;
        range("camera.radius_factor", c.radius_factor, 1e-6, f64::MAX);
        range("camera.theta_deg", c.theta_deg, 0.0, 90.0);
        range("camera.phi_deg", c.phi_deg, 0.0, 360.0);
        range("camera.focal_length_mm", c.focal_length_mm, 1e-3, f64::MAX);
        let l = &self.lights;
        range("lights.power_w", l.power_w, 1e-9, f64::MAX);
        range("lights.height_fraction", l.height_fraction, 0.0, 1.0);
        range("lights.size_fraction", l.size_fraction, 1e-6, 0.5);
        let d = &self.distractors;
        range("distractors.scale_range", d.scale_range, 1e-6, f64::MAX);
        if !(c.theta_deg[0] > 0.0) {
            errs.push("camera.theta_deg: lower bound must be > 0 (pole is degenerate)".into());
        }
        if !(c.sensor_width_mm > 0.0) {
            errs.push("camera.sensor_width_mm must be positive".into());
        }
        if c.focus_shift.iter().any(|s| !(*s >= 0.0)) {
            errs.push("camera.focus_shift entries must be >= 0".into());
        }
        if !(self.scene.margin >= 1.0) {
            errs.push(format!("scene.margin {} must be >= 1", self.scene.margin));
        }
        if !(l.reference_area_m2 > 0.0) {
            errs.push("lights.reference_area_m2 must be positive".into());
        }
        if l.max_count == 0 {
            errs.push("lights.max_count must be >= 1".into());
        }
        if !(0.0..=90.0).contains(&l.max_tilt_deg) {
            errs.push("lights.max_tilt_deg must lie in [0, 90]".into());
        }
        if !(l.min_channel > 0.0 && l.min_channel <= 1.0) {
            errs.push("lights.min_channel must lie in (0, 1]".into());
        }
        let o = &self.objects;
        if o.rotation_limits_deg.iter().any(|r| !(0.0..=180.0).contains(r)) {
            errs.push("objects.rotation_limits_deg entries must lie in [0, 180]".into());
        }
        if !(o.placement_spread > 0.0) {
            errs.push("objects.placement_spread must be positive".into());
        }
        if o.max_attempts == 0 || d.max_attempts == 0 {
            errs.push("max_attempts must be >= 1".into());
        }
        if !(d.fallback_size_m > 0.0) {
            errs.push("distractors.fallback_size_m must be positive".into());
        }
        let t = &self.textures;
        let probs = [t.solid, t.image, t.pbr, t.pbr_metal];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (t.total() - 1.0).abs() > 1e-6 {
            errs.push(format!(
                "textures: probabilities {probs:?} must lie in [0,1] and sum to 1"
            ));
        }
        if !(t.pbr_jitter >= 0.0) {
            errs.push("textures.pbr_jitter must be >= 0".into());
        }
        if !(t.tiling_m > 0.0) {
            errs.push("textures.tiling_m must be positive".into());
        }
        errs
    }
}
