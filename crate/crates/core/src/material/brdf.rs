//! Metalness/roughness reflectance model.
//!
//! Specular: GGX normal distribution, separable Smith masking-shadowing and
//! Schlick Fresnel with `F0 = mix(0.04 * specular, albedo, metalness)`.
//! Diffuse: Lambertian `albedo / π` scaled by `1 - metalness`, coupled to the
//! specular lobe as `(1 - E(μi)) (1 - E(μo)) / (1 - E_avg)` where `E` is the
//! tabulated directional albedo of the specular lobe. The coupling keeps the
//! model reciprocal and bounds the total directional albedo by 1. With the
//! specular lobe switched off (`specular = 0`, `metalness = 0`) it reduces to
//! a pure Lambertian.

use std::f64::consts::{FRAC_1_PI, PI, TAU};
use std::sync::OnceLock;

use crate::math::{Color, Vec3};
use crate::rng::UniformSource;

pub const MIN_ROUGHNESS: f64 = 0.02;
const DIELECTRIC_F0: f64 = 0.04;

/// A material resolved at one surface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub albedo: Color,
    pub metalness: f64,
    pub roughness: f64,
    /// Weight of the dielectric specular lobe; 1 is the standard 4% reflector.
    pub specular: f64,
}

impl SurfacePoint {
    pub fn new(albedo: Color, metalness: f64, roughness: f64) -> SurfacePoint {
        SurfacePoint {
            albedo,
            metalness: metalness.clamp(0.0, 1.0),
            roughness: roughness.clamp(MIN_ROUGHNESS, 1.0),
            specular: 1.0,
        }
    }

    /// Lambertian only.
    pub fn diffuse(albedo: Color) -> SurfacePoint {
        SurfacePoint {
            albedo,
            metalness: 0.0,
            roughness: 1.0,
            specular: 0.0,
        }
    }

    fn alpha(&self) -> f64 {
        let r = self.roughness.max(MIN_ROUGHNESS);
        r * r
    }

    fn f0(&self) -> Color {
        Vec3::splat(DIELECTRIC_F0 * self.specular).lerp(self.albedo, self.metalness)
    }

    fn f90(&self) -> f64 {
        self.specular + (1.0 - self.specular) * self.metalness
    }

    fn fresnel(&self, cos: f64) -> Color {
        let w = (1.0 - cos.clamp(0.0, 1.0)).powi(5);
        let f0 = self.f0();
        f0 * (1.0 - w) + Vec3::splat(self.f90() * w)
    }

    /// Directional albedo of the specular lobe at `cos_theta`.
    fn specular_albedo(&self, cos_theta: f64) -> Color {
        let (a, b) = energy_table().lookup(cos_theta, self.roughness);
        self.f0() * a + Vec3::splat(self.f90() * b)
    }

    fn specular_albedo_avg(&self) -> Color {
        let (a, b) = energy_table().lookup_avg(self.roughness);
        self.f0() * a + Vec3::splat(self.f90() * b)
    }

    fn diffuse_weight(&self) -> f64 {
        1.0 - self.metalness
    }
}

/// Diffuse and specular parts of one BRDF evaluation (1/sr).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrdfLobes {
    pub diffuse: Color,
    pub specular: Color,
}

impl BrdfLobes {
    pub const ZERO: BrdfLobes = BrdfLobes {
        diffuse: Vec3::ZERO,
        specular: Vec3::ZERO,
    };

    pub fn total(&self) -> Color {
        self.diffuse + self.specular
    }
}

#[inline]
fn ggx_d(cos_h: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    let c2 = cos_h * cos_h;
    let denom = c2 * (a2 - 1.0) + 1.0;
    a2 / (PI * denom * denom)
}

#[inline]
fn smith_g1(cos: f64, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    2.0 * cos / (cos + (a2 + (1.0 - a2) * cos * cos).sqrt())
}

/// Both lobes for light arriving from `wi` and leaving towards `wo`.
/// Directions below the hemisphere of `n` give zero.
pub fn evaluate_lobes(p: &SurfacePoint, wi: Vec3, wo: Vec3, n: Vec3) -> BrdfLobes {
    let cos_i = wi.dot(n);
    let cos_o = wo.dot(n);
    if cos_i <= 0.0 || cos_o <= 0.0 {
        return BrdfLobes::ZERO;
    }
    let h = (wi + wo).normalized();
    let cos_h = h.dot(n).max(0.0);
    let alpha = p.alpha();
    let spec_scale = ggx_d(cos_h, alpha) * smith_g1(cos_i, alpha) * smith_g1(cos_o, alpha)
        / (4.0 * cos_i * cos_o);
    let specular = p.fresnel(wi.dot(h)) * spec_scale;

    let kd = p.diffuse_weight();
    let diffuse = if kd > 0.0 {
        let e_i = p.specular_albedo(cos_i);
        let e_o = p.specular_albedo(cos_o);
        let e_avg = p.specular_albedo_avg();
        let couple = |ei: f64, eo: f64, ea: f64| {
            if 1.0 - ea > 1e-9 {
                ((1.0 - ei) * (1.0 - eo) / (1.0 - ea)).max(0.0)
            } else {
                0.0
            }
        };
        let c = Vec3::new(
            couple(e_i.x, e_o.x, e_avg.x),
            couple(e_i.y, e_o.y, e_avg.y),
            couple(e_i.z, e_o.z, e_avg.z),
        );
        p.albedo.mul_elem(c) * (kd * FRAC_1_PI)
    } else {
        Vec3::ZERO
    };
    BrdfLobes { diffuse, specular }
}

/// Reflectance density (1/sr), non-negative in every channel.
pub fn evaluate_brdf(p: &SurfacePoint, wi: Vec3, wo: Vec3, n: Vec3) -> Color {
    evaluate_lobes(p, wi, wo, n).total()
}

/// Probability of picking the specular lobe, from the estimated energy of
/// each lobe seen from `cos_o`.
fn specular_probability(p: &SurfacePoint, cos_o: f64) -> f64 {
    let e = p.specular_albedo(cos_o);
    let spec = e.luminance().max(0.0);
    let diff = (p.albedo.mul_elem(Vec3::ONE - e) * p.diffuse_weight())
        .luminance()
        .max(0.0);
    if spec + diff <= 0.0 {
        0.5
    } else {
        spec / (spec + diff)
    }
}

/// Solid-angle density of [`sample_brdf`] producing `wi`.
pub fn brdf_pdf(p: &SurfacePoint, wi: Vec3, wo: Vec3, n: Vec3) -> f64 {
    let cos_i = wi.dot(n);
    let cos_o = wo.dot(n);
    if cos_i <= 0.0 || cos_o <= 0.0 {
        return 0.0;
    }
    let ps = specular_probability(p, cos_o);
    let diffuse_pdf = cos_i * FRAC_1_PI;
    if ps <= 0.0 {
        return diffuse_pdf;
    }
    let h = (wi + wo).normalized();
    let cos_h = h.dot(n).max(0.0);
    let wo_h = wo.dot(h).abs().max(1e-300);
    let spec_pdf = ggx_d(cos_h, p.alpha()) * cos_h / (4.0 * wo_h);
    ps * spec_pdf + (1.0 - ps) * diffuse_pdf
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrdfSample {
    pub direction: Vec3,
    /// Mixture density over both lobes.
    pub pdf: f64,
    pub reflectance: Color,
}

fn local_to_world(n: Vec3, v: Vec3) -> Vec3 {
    let (t, b) = n.orthonormal_basis();
    t * v.x + b * v.y + n * v.z
}

/// Cosine-weighted hemisphere direction around `n`.
pub fn sample_cosine_hemisphere<R: UniformSource>(n: Vec3, rng: &mut R) -> Vec3 {
    let u1 = rng.uniform();
    let u2 = rng.uniform();
    let r = u1.sqrt();
    let phi = TAU * u2;
    let local = Vec3::new(r * phi.cos(), r * phi.sin(), (1.0 - u1).max(0.0).sqrt());
    local_to_world(n, local)
}

fn sample_ggx_half(n: Vec3, alpha: f64, u1: f64, u2: f64) -> Vec3 {
    let tan2 = alpha * alpha * u1 / (1.0 - u1).max(1e-300);
    let cos = 1.0 / (1.0 + tan2).sqrt();
    let sin = (1.0 - cos * cos).max(0.0).sqrt();
    let phi = TAU * u2;
    local_to_world(n, Vec3::new(sin * phi.cos(), sin * phi.sin(), cos))
}

/// Importance-samples an incoming direction for outgoing `wo`. Returns
/// `None` when the outgoing direction is below the surface or the drawn
/// direction falls below it.
pub fn sample_brdf<R: UniformSource>(
    p: &SurfacePoint,
    wo: Vec3,
    n: Vec3,
    rng: &mut R,
) -> Option<BrdfSample> {
    let cos_o = wo.dot(n);
    if cos_o <= 0.0 {
        return None;
    }
    let ps = specular_probability(p, cos_o);
    let pick = rng.uniform();
    let wi = if pick < ps {
        let h = sample_ggx_half(n, p.alpha(), rng.uniform(), rng.uniform());
        (h * (2.0 * wo.dot(h)) - wo).normalized()
    } else {
        sample_cosine_hemisphere(n, rng)
    };
    if wi.dot(n) <= 0.0 {
        return None;
    }
    let pdf = brdf_pdf(p, wi, wo, n);
    if !(pdf > 0.0) || !pdf.is_finite() {
        return None;
    }
    Some(BrdfSample {
        direction: wi,
        pdf,
        reflectance: evaluate_brdf(p, wi, wo, n),
    })
}

/// Directional albedo of the unit-Fresnel specular lobe, split as
/// `E = F0 * a + F90 * b`, tabulated over `(cos θ, roughness)`.
struct EnergyTable {
    a: Vec<f64>,
    b: Vec<f64>,
    a_avg: Vec<f64>,
    b_avg: Vec<f64>,
}

const TABLE_MU: usize = 32;
const TABLE_ROUGH: usize = 32;
const TABLE_SAMPLES: u32 = 4096;

fn table_mu(i: usize) -> f64 {
    (i as f64 / (TABLE_MU - 1) as f64).max(1e-3)
}

fn table_roughness(j: usize) -> f64 {
    MIN_ROUGHNESS + (1.0 - MIN_ROUGHNESS) * j as f64 / (TABLE_ROUGH - 1) as f64
}

fn radical_inverse(mut bits: u32) -> f64 {
    bits = bits.reverse_bits();
    bits as f64 / 4_294_967_296.0
}

/// Integrates the specular lobe with GGX importance sampling on a
/// Hammersley point set. Returns `(a, b)`.
fn integrate_specular(cos_o: f64, roughness: f64) -> (f64, f64) {
    let alpha = roughness * roughness;
    let n = Vec3::Z;
    let wo = Vec3::new((1.0 - cos_o * cos_o).max(0.0).sqrt(), 0.0, cos_o);
    let (mut a, mut b) = (0.0, 0.0);
    for k in 0..TABLE_SAMPLES {
        let u1 = (k as f64 + 0.5) / TABLE_SAMPLES as f64;
        let u2 = radical_inverse(k);
        let h = sample_ggx_half(n, alpha, u1, u2);
        let wo_h = wo.dot(h);
        let wi = h * (2.0 * wo_h) - wo;
        let cos_i = wi.z;
        if cos_i <= 0.0 || wo_h <= 0.0 {
            continue;
        }
        // f cos_i / pdf with pdf = D cos_h / (4 wo·h) and F factored out.
        let g = smith_g1(cos_i, alpha) * smith_g1(cos_o, alpha);
        let weight = g * wo_h / (cos_o * h.z);
        let w = (1.0 - wo_h).powi(5);
        a += weight * (1.0 - w);
        b += weight * w;
    }
    (a / TABLE_SAMPLES as f64, b / TABLE_SAMPLES as f64)
}

fn energy_table() -> &'static EnergyTable {
    static TABLE: OnceLock<EnergyTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut a = vec![0.0; TABLE_MU * TABLE_ROUGH];
        let mut b = vec![0.0; TABLE_MU * TABLE_ROUGH];
        for j in 0..TABLE_ROUGH {
            for i in 0..TABLE_MU {
                let (ea, eb) = integrate_specular(table_mu(i), table_roughness(j));
                a[j * TABLE_MU + i] = ea;
                b[j * TABLE_MU + i] = eb;
            }
        }
        // E_avg = 2 ∫ E(μ) μ dμ, trapezoid rule over the table's μ samples.
        let avg = |t: &[f64], j: usize| {
            let row = &t[j * TABLE_MU..(j + 1) * TABLE_MU];
            let h = 1.0 / (TABLE_MU - 1) as f64;
            let mut s = 0.0;
            for i in 0..TABLE_MU - 1 {
                let (m0, m1) = (i as f64 * h, (i + 1) as f64 * h);
                s += 0.5 * h * (row[i] * m0 + row[i + 1] * m1);
            }
            2.0 * s
        };
        let a_avg = (0..TABLE_ROUGH).map(|j| avg(&a, j)).collect();
        let b_avg = (0..TABLE_ROUGH).map(|j| avg(&b, j)).collect();
        EnergyTable { a, b, a_avg, b_avg }
    })
}

impl EnergyTable {
    fn coords(cos: f64, roughness: f64) -> (usize, usize, f64, f64) {
        let x = cos.clamp(0.0, 1.0) * (TABLE_MU - 1) as f64;
        let y = ((roughness.clamp(MIN_ROUGHNESS, 1.0) - MIN_ROUGHNESS) / (1.0 - MIN_ROUGHNESS))
            * (TABLE_ROUGH - 1) as f64;
        // Both are non-negative, so truncation is the floor.
        let i = (x as usize).min(TABLE_MU - 2);
        let j = (y as usize).min(TABLE_ROUGH - 2);
        (i, j, x - i as f64, y - j as f64)
    }

    fn lookup(&self, cos: f64, roughness: f64) -> (f64, f64) {
        let (i, j, fx, fy) = Self::coords(cos, roughness);
        let bilerp = |t: &[f64]| {
            let at = |ii: usize, jj: usize| t[jj * TABLE_MU + ii];
            let top = at(i, j) * (1.0 - fx) + at(i + 1, j) * fx;
            let bot = at(i, j + 1) * (1.0 - fx) + at(i + 1, j + 1) * fx;
            top * (1.0 - fy) + bot * fy
        };
        (bilerp(&self.a), bilerp(&self.b))
    }

    fn lookup_avg(&self, roughness: f64) -> (f64, f64) {
        let (_, j, _, fy) = Self::coords(0.0, roughness);
        let lerp = |t: &[f64]| t[j] * (1.0 - fy) + t[j + 1] * fy;
        (lerp(&self.a_avg), lerp(&self.b_avg))
    }
}
