//! Deterministic synthetic scene oracle.
//!
//! Each class owns a foreground region (in unit image coordinates) and a set
//! of preferred token ids `{t : t mod (C + 1) == c}`. At every scale:
//!
//! * `cond_c = base + contrast * [p in R_c][t in T_c] + jitter_c`
//! * `uncond = base + blur(mean_c contrast * [p in R_c][t in T_c]) + jitter_u`
//!
//! `base` is a shared logit texture, `blur` a 3x3 neighbourhood average whose
//! off-centre weight is `smoothness`, and the jitters are independent Gaussian
//! model errors with standard deviation `noise * contrast`. So the conditional
//! and unconditional logits differ mostly inside the class's region. Logits
//! are rounded to `f32` precision so that dumps replay bit-exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ModelOracle;
use crate::error::{Error, Result};
use crate::tensor::{LogitTensor, Scale, SegMask, TokenMap, VocabSpec};

/// Foreground region in unit coordinates (`y` down, `x` right, both in `[0, 1]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Rect {
        top: f64,
        left: f64,
        bottom: f64,
        right: f64,
    },
    Disk {
        cy: f64,
        cx: f64,
        radius: f64,
    },
}

impl Shape {
    pub fn contains(&self, y: f64, x: f64) -> bool {
        match *self {
            Shape::Rect {
                top,
                left,
                bottom,
                right,
            } => (top..bottom).contains(&y) && (left..right).contains(&x),
            Shape::Disk { cy, cx, radius } => (y - cy).powi(2) + (x - cx).powi(2) <= radius * radius,
        }
    }

    /// Cell-centre rasterisation at `scale`.
    pub fn rasterize(&self, scale: Scale) -> SegMask {
        SegMask::from_fn(scale.h, scale.w, |r, c| {
            self.contains((r as f64 + 0.5) / scale.h as f64, (c as f64 + 0.5) / scale.w as f64)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneOracleConfig {
    pub vocab: VocabSpec,
    pub scales: Vec<Scale>,
    pub classes: Vec<Shape>,
    pub contrast: f64,
    pub smoothness: f64,
    pub noise: f64,
    pub seed: u64,
}

impl SceneOracleConfig {
    /// Four classes (two rectangles, two disks) over 64 tokens on the default
    /// six-scale schedule.
    pub fn desk(seed: u64) -> Self {
        Self {
            vocab: VocabSpec::new(64).expect("64 >= 2"),
            scales: crate::tensor::ScaleSchedule::default_sides()
                .iter()
                .map(|&s| Scale::square(s))
                .collect(),
            classes: vec![
                Shape::Rect {
                    top: 0.15,
                    left: 0.10,
                    bottom: 0.65,
                    right: 0.55,
                },
                Shape::Rect {
                    top: 0.30,
                    left: 0.40,
                    bottom: 0.85,
                    right: 0.90,
                },
                Shape::Disk {
                    cy: 0.35,
                    cx: 0.65,
                    radius: 0.28,
                },
                Shape::Disk {
                    cy: 0.68,
                    cx: 0.32,
                    radius: 0.25,
                },
            ],
            contrast: 1.0,
            smoothness: 1.0,
            noise: 0.2,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.classes.len();
        if c == 0 {
            return Err(Error::InvalidOracle("at least one class is required".into()));
        }
        if self.vocab.size() < c + 1 {
            return Err(Error::InvalidOracle(format!(
                "vocabulary of {} cannot hold {c} class token sets plus background tokens",
                self.vocab.size()
            )));
        }
        if self.scales.is_empty() || self.scales.iter().any(|s| s.area() == 0) {
            return Err(Error::InvalidOracle("scales must be non-empty and non-degenerate".into()));
        }
        for (name, value) in [("contrast", self.contrast), ("smoothness", self.smoothness), ("noise", self.noise)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::InvalidOracle(format!("{name} must be finite and >= 0, got {value}")));
            }
        }
        for (class, shape) in self.classes.iter().enumerate() {
            for &scale in self.scales.iter().filter(|s| s.area() >= 2) {
                let fg = shape.rasterize(scale).foreground_count();
                if fg == 0 || fg == scale.area() {
                    return Err(Error::InvalidOracle(format!(
                        "class {class} foreground is {} at scale {scale}",
                        if fg == 0 { "empty" } else { "the full grid" }
                    )));
                }
            }
        }
        Ok(())
    }

    fn is_class_token(&self, class: usize, token: usize) -> bool {
        token % (self.classes.len() + 1) == class
    }

    /// Planted foreground of `class` at the final resolution.
    pub fn mask(&self, class: u32) -> Result<SegMask> {
        let shape = self.shape(class)?;
        Ok(shape.rasterize(*self.scales.last().expect("validated non-empty")))
    }

    fn shape(&self, class: u32) -> Result<&Shape> {
        self.classes.get(class as usize).ok_or(Error::UnknownClass {
            class,
            classes: self.classes.len(),
        })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian_block(seed: u64, k: usize, stream: u64, len: usize) -> Vec<f64> {
    let key = splitmix64(splitmix64(seed ^ ((k as u64) << 40)) ^ stream);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

const BASE_STREAM: u64 = 0x6261_7365;
const UNCOND_STREAM: u64 = 0x756e_636f;
const COND_STREAM: u64 = 0x636f_6e64_0000;

/// Logits of the scene at step `k`; `condition = None` gives the unconditional
/// prediction.
pub fn scene_logits(cfg: &SceneOracleConfig, k: usize, condition: Option<u32>) -> Result<LogitTensor<f64>> {
    let scale = *cfg.scales.get(k).ok_or_else(|| {
        Error::OracleFailure(format!("step {k} is beyond the {}-step schedule", cfg.scales.len()))
    })?;
    if let Some(c) = condition {
        cfg.shape(c)?;
    }
    let v = cfg.vocab.size();
    let n = scale.area();
    let regions: Vec<SegMask> = cfg.classes.iter().map(|s| s.rasterize(scale)).collect();

    let boost = |class: usize, pos: usize, token: usize| -> f64 {
        if regions[class].bits()[pos] && cfg.is_class_token(class, token) {
            cfg.contrast
        } else {
            0.0
        }
    };

    let mut values = gaussian_block(cfg.seed, k, BASE_STREAM, n * v);
    let jitter_scale = cfg.noise * cfg.contrast;
    match condition {
        Some(c) => {
            let c = c as usize;
            let jitter = gaussian_block(cfg.seed, k, COND_STREAM + c as u64, n * v);
            for (i, x) in values.iter_mut().enumerate() {
                *x += boost(c, i / v, i % v) + jitter_scale * jitter[i];
            }
        }
        None => {
            let classes = cfg.classes.len() as f64;
            let mean: Vec<f64> = (0..n * v)
                .map(|i| (0..cfg.classes.len()).map(|c| boost(c, i / v, i % v)).sum::<f64>() / classes)
                .collect();
            let blurred = blur(&mean, scale, v, cfg.smoothness);
            let jitter = gaussian_block(cfg.seed, k, UNCOND_STREAM, n * v);
            for (i, x) in values.iter_mut().enumerate() {
                *x += blurred[i] + jitter_scale * jitter[i];
            }
        }
    }
    for x in values.iter_mut() {
        *x = *x as f32 as f64;
    }
    LogitTensor::new(scale.h, scale.w, cfg.vocab, values)
}

/// 3x3 weighted neighbourhood mean: weight 1 at the centre, `smoothness` for
/// edge neighbours and `smoothness / 2` for corners.
fn blur(values: &[f64], scale: Scale, v: usize, smoothness: f64) -> Vec<f64> {
    if smoothness == 0.0 {
        return values.to_vec();
    }
    let mut out = vec![0.0; values.len()];
    for r in 0..scale.h {
        for c in 0..scale.w {
            let dst = (r * scale.w + c) * v;
            let mut total = 0.0;
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                    if rr < 0 || cc < 0 || rr >= scale.h as i64 || cc >= scale.w as i64 {
                        continue;
                    }
                    let weight = match (dr, dc) {
                        (0, 0) => 1.0,
                        (0, _) | (_, 0) => smoothness,
                        _ => smoothness / 2.0,
                    };
                    total += weight;
                    let src = (rr as usize * scale.w + cc as usize) * v;
                    for t in 0..v {
                        out[dst + t] += weight * values[src + t];
                    }
                }
            }
            for x in &mut out[dst..dst + v] {
                *x /= total;
            }
        }
    }
    out
}

/// Scene oracle; the token history is accepted but does not influence the logits.
#[derive(Debug, Clone)]
pub struct SceneOracle {
    config: SceneOracleConfig,
}

impl SceneOracle {
    pub fn new(config: SceneOracleConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &SceneOracleConfig {
        &self.config
    }

    pub fn mask(&self, class: u32) -> Result<SegMask> {
        self.config.mask(class)
    }
}

impl ModelOracle for SceneOracle {
    fn vocab(&self) -> VocabSpec {
        self.config.vocab
    }

    fn scales(&self) -> &[Scale] {
        &self.config.scales
    }

    fn next_logits(&self, k: usize, _history: &[TokenMap], condition: Option<u32>) -> Result<LogitTensor<f64>> {
        scene_logits(&self.config, k, condition)
    }
}
