//! Synthetic ground-truth images: horizontal material layers with
//! horizontal intensity gradients, and concentric noisy rings.
//!
//! Generation is a pure function of `(spec, seed)`. Noise comes from a
//! counter-based generator so every pixel's sample is independent of
//! evaluation order:
//!
//! * `key = splitmix64(seed)`
//! * `u(k) = ((splitmix64(key + k) >> 11) + 0.5) * 2^-53`, a uniform in (0, 1)
//! * pixel `i` (row-major) draws `z = sqrt(-2 ln u(2i)) * cos(2 pi u(2i+1))`
//!
//! where `splitmix64(x)` is the standard SplitMix64 finalizer applied to
//! `x + 0x9E3779B97F4A7C15` with wrapping arithmetic.

use thiserror::Error;

use crate::boundary::{BoundaryModel, CircleModel, LineModel};
use crate::config::{ConfigError, KeyValues};
use crate::raster::{ClassMask, GrayImage, LabelMap, RasterError};
use crate::stats::normal_cdf;

#[derive(Debug, Error, PartialEq)]
pub enum PhantomError {
    #[error("invalid phantom spec: {0}")]
    Argument(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based standard normal noise field.
#[derive(Debug, Clone, Copy)]
pub struct NoiseField {
    key: u64,
}

impl NoiseField {
    pub fn new(seed: u64) -> Self {
        Self {
            key: splitmix64(seed),
        }
    }

    pub fn uniform(&self, counter: u64) -> f64 {
        let bits = splitmix64(self.key.wrapping_add(counter)) >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&self, index: u64) -> f64 {
        let u1 = self.uniform(2 * index);
        let u2 = self.uniform(2 * index + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// A known interface between two truth classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthBoundary {
    pub class_a: u32,
    pub class_b: u32,
    pub model: BoundaryModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub image: GrayImage,
    pub mask: ClassMask,
    pub truth: LabelMap,
    pub boundaries: Vec<TruthBoundary>,
}

/// Horizontal layers stacked top to bottom.
///
/// Layer `k` spans rows `boundaries[k-1] .. boundaries[k]`, so the interface
/// `k` lies between rows `boundaries[k] - 1` and `boundaries[k]`, at
/// `row = boundaries[k] - 0.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderPhantomSpec {
    pub width: usize,
    pub height: usize,
    pub boundaries: Vec<usize>,
    /// Intensity at column 0, per layer.
    pub base: Vec<f64>,
    /// Intensity change per column, per layer.
    pub gradient: Vec<f64>,
    /// Class id per layer; layers may share a class. Defaults to `1..=layers`.
    pub classes: Option<Vec<u32>>,
    pub noise: f64,
    /// Pixels closer than this to an interface are left unlabeled.
    pub void_half_width: f64,
    /// Scale of the Gaussian edge spread across interfaces; 0 gives sharp steps.
    pub edge_blur: f64,
}

impl CylinderPhantomSpec {
    /// 600x400 layered object: bore air, three materials, outer air (the air
    /// class appears twice). Adjacent-layer contrast is at least 20 with noise
    /// 2 (20 dB); the 9 px half-width void leaves 88% of the pixels labeled.
    pub fn reference() -> Self {
        Self {
            width: 400,
            height: 600,
            boundaries: vec![120, 240, 365, 480],
            base: vec![200.0, 20.0, 60.0, 100.0, 10.0],
            gradient: vec![0.15, 0.3, 0.25, 0.2, 0.1],
            classes: Some(vec![1, 2, 3, 4, 1]),
            noise: 2.0,
            void_half_width: 9.0,
            edge_blur: 1.0,
        }
    }

    pub fn from_config(kv: &KeyValues) -> Result<Self, PhantomError> {
        Ok(Self {
            width: kv.require("width")?,
            height: kv.require("height")?,
            boundaries: kv.require_list("boundaries")?,
            base: kv.require_list("base")?,
            gradient: kv.require_list("gradient")?,
            classes: kv.get_list("classes")?,
            noise: kv.get("noise")?.unwrap_or(0.0),
            void_half_width: kv.get("void_half_width")?.unwrap_or(0.0),
            edge_blur: kv.get("edge_blur")?.unwrap_or(0.0),
        })
    }

    fn layer_classes(&self) -> Vec<u32> {
        self.classes
            .clone()
            .unwrap_or_else(|| (1..=self.base.len() as u32).collect())
    }

    pub fn validate(&self) -> Result<(), PhantomError> {
        let bad = |m: String| Err(PhantomError::Argument(m));
        if self.width == 0 || self.height == 0 {
            return bad("image dimensions must be positive".into());
        }
        if self.boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return bad("boundary rows must be strictly increasing".into());
        }
        if self.boundaries.iter().any(|&b| b == 0 || b >= self.height) {
            return bad("boundary rows must lie strictly inside the image".into());
        }
        let layers = self.boundaries.len() + 1;
        if self.base.len() != layers || self.gradient.len() != layers {
            return bad(format!("need {layers} base intensities and gradients"));
        }
        if let Some(classes) = &self.classes {
            if classes.len() != layers || classes.contains(&0) {
                return bad(format!("need {layers} positive class ids"));
            }
            if classes.windows(2).any(|w| w[0] == w[1]) {
                return bad("adjacent layers must have different classes".into());
            }
        }
        check_noise_void_blur(self.noise, self.void_half_width, self.edge_blur)?;
        if self.base.iter().chain(&self.gradient).any(|v| !v.is_finite()) {
            return bad("intensities must be finite".into());
        }
        Ok(())
    }
}

fn check_noise_void_blur(noise: f64, void: f64, blur: f64) -> Result<(), PhantomError> {
    for (name, v) in [("noise", noise), ("void_half_width", void), ("edge_blur", blur)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(PhantomError::Argument(format!("{name} must be finite and >= 0")));
        }
    }
    Ok(())
}

/// Blend weight for crossing an interface at signed distance `t`.
fn edge_weight(t: f64, blur: f64) -> f64 {
    if blur > 0.0 {
        normal_cdf(t / blur)
    } else if t >= 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn make_cylinder_phantom(spec: &CylinderPhantomSpec, seed: u64) -> Result<Phantom, PhantomError> {
    spec.validate()?;
    let noise = NoiseField::new(seed);
    let classes = spec.layer_classes();
    let interfaces: Vec<f64> = spec.boundaries.iter().map(|&b| b as f64 - 0.5).collect();
    let (w, h) = (spec.width, spec.height);
    let layer_of = |r: usize| spec.boundaries.iter().filter(|&&b| b <= r).count();

    let mut data = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    let mut truth = Vec::with_capacity(w * h);
    for r in 0..h {
        let layer = layer_of(r);
        let near_void = interfaces
            .iter()
            .any(|&y| (r as f64 - y).abs() < spec.void_half_width);
        for c in 0..w {
            let cf = c as f64;
            let level = |k: usize| spec.base[k] + spec.gradient[k] * cf;
            let mut v = level(0);
            for (k, &y) in interfaces.iter().enumerate() {
                v += (level(k + 1) - level(k)) * edge_weight(r as f64 - y, spec.edge_blur);
            }
            v += spec.noise * noise.normal((r * w + c) as u64);
            data.push(v);
            truth.push(classes[layer]);
            mask.push(if near_void { 0 } else { classes[layer] });
        }
    }
    let class_count = classes.iter().copied().max().unwrap_or(1);
    let boundaries = interfaces
        .iter()
        .enumerate()
        .map(|(k, &y)| TruthBoundary {
            class_a: classes[k].min(classes[k + 1]),
            class_b: classes[k].max(classes[k + 1]),
            model: BoundaryModel::Line(LineModel {
                slope: 0.0,
                intercept: y,
            }),
        })
        .collect();
    Ok(Phantom {
        image: GrayImage::new(w, h, data)?,
        mask: ClassMask::with_class_count(w, h, mask, class_count)?,
        truth: LabelMap::new(w, h, truth, class_count)?,
        boundaries,
    })
}

/// Concentric annuli around `center`; annulus `k` (from the center out) is class `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RingPhantomSpec {
    pub width: usize,
    pub height: usize,
    /// `(row, col)`
    pub center: (f64, f64),
    pub radii: Vec<f64>,
    /// One intensity per annulus, innermost first (`radii.len() + 1` values).
    pub intensities: Vec<f64>,
    pub noise: f64,
    pub void_half_width: f64,
    pub edge_blur: f64,
}

impl RingPhantomSpec {
    /// 256x256 converging-shock look-alike: five annuli, noise 4 against
    /// contrasts of 30-40, 3 px half-width voids (about 85% labeled).
    pub fn reference() -> Self {
        Self {
            width: 256,
            height: 256,
            center: (127.3, 128.6),
            radii: vec![30.0, 55.0, 80.0, 105.0],
            intensities: vec![100.0, 140.0, 110.0, 150.0, 120.0],
            noise: 4.0,
            void_half_width: 3.0,
            edge_blur: 1.0,
        }
    }

    pub fn from_config(kv: &KeyValues) -> Result<Self, PhantomError> {
        let center: Vec<f64> = kv.require_list("center")?;
        if center.len() != 2 {
            return Err(PhantomError::Argument("center needs `row, col`".into()));
        }
        Ok(Self {
            width: kv.require("width")?,
            height: kv.require("height")?,
            center: (center[0], center[1]),
            radii: kv.require_list("radii")?,
            intensities: kv.require_list("intensities")?,
            noise: kv.get("noise")?.unwrap_or(0.0),
            void_half_width: kv.get("void_half_width")?.unwrap_or(0.0),
            edge_blur: kv.get("edge_blur")?.unwrap_or(0.0),
        })
    }

    pub fn validate(&self) -> Result<(), PhantomError> {
        let bad = |m: &str| Err(PhantomError::Argument(m.into()));
        if self.width == 0 || self.height == 0 {
            return bad("image dimensions must be positive");
        }
        let (r, c) = self.center;
        if !(r >= 0.0 && c >= 0.0 && r <= (self.height - 1) as f64 && c <= (self.width - 1) as f64) {
            return bad("center must lie inside the image");
        }
        if self.radii.is_empty() || self.radii[0] <= 0.0 || self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return bad("radii must be positive and strictly increasing");
        }
        if self.intensities.len() != self.radii.len() + 1 {
            return bad("need one intensity per annulus (radii + 1)");
        }
        if self.intensities.iter().chain(&self.radii).any(|v| !v.is_finite()) {
            return bad("values must be finite");
        }
        check_noise_void_blur(self.noise, self.void_half_width, self.edge_blur)
    }
}

pub fn make_ring_phantom(spec: &RingPhantomSpec, seed: u64) -> Result<Phantom, PhantomError> {
    spec.validate()?;
    let noise = NoiseField::new(seed);
    let (w, h) = (spec.width, spec.height);
    let mut data = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    let mut truth = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let dist = (r as f64 - spec.center.0).hypot(c as f64 - spec.center.1);
            let annulus = spec.radii.iter().filter(|&&rad| rad <= dist).count();
            let mut v = spec.intensities[0];
            for (k, &rad) in spec.radii.iter().enumerate() {
                v += (spec.intensities[k + 1] - spec.intensities[k]) * edge_weight(dist - rad, spec.edge_blur);
            }
            v += spec.noise * noise.normal((r * w + c) as u64);
            let label = annulus as u32 + 1;
            let near_void = spec
                .radii
                .iter()
                .any(|&rad| (dist - rad).abs() < spec.void_half_width);
            data.push(v);
            truth.push(label);
            mask.push(if near_void { 0 } else { label });
        }
    }
    let class_count = spec.radii.len() as u32 + 1;
    let boundaries = spec
        .radii
        .iter()
        .enumerate()
        .map(|(k, &radius)| TruthBoundary {
            class_a: k as u32 + 1,
            class_b: k as u32 + 2,
            model: BoundaryModel::Circle(CircleModel {
                center: spec.center,
                radius,
            }),
        })
        .collect();
    Ok(Phantom {
        image: GrayImage::new(w, h, data)?,
        mask: ClassMask::with_class_count(w, h, mask, class_count)?,
        truth: LabelMap::new(w, h, truth, class_count)?,
        boundaries,
    })
}
