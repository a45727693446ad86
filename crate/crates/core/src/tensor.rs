//! Shared numerical data types: vocabularies, scale schedules, logit tensors,
//! guidance fields, token maps and segmentation masks.
//!
//! Every grid is flattened row-major (left-to-right, top-to-bottom); for
//! per-position vectors the vocabulary axis is contiguous.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Size of the discrete token vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct VocabSpec(usize);

impl VocabSpec {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidVocab(size));
        }
        Ok(Self(size))
    }

    pub fn size(self) -> usize {
        self.0
    }

    /// Attention temperature denominator, the square root of the vocabulary size.
    pub fn sqrt_size<T: Scalar>(self) -> T {
        T::of_usize(self.0).sqrt()
    }
}

impl TryFrom<usize> for VocabSpec {
    type Error = Error;

    fn try_from(size: usize) -> Result<Self> {
        Self::new(size)
    }
}

impl From<VocabSpec> for usize {
    fn from(v: VocabSpec) -> usize {
        v.0
    }
}

/// Grid size of one token map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scale {
    pub h: usize,
    pub w: usize,
}

impl Scale {
    pub fn new(h: usize, w: usize) -> Self {
        Self { h, w }
    }

    pub fn square(side: usize) -> Self {
        Self { h: side, w: side }
    }

    pub fn area(self) -> usize {
        self.h * self.w
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.h, self.w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// `lambda_k = w * k / (K - 1)`, growing from 0 at the first step to `w` at the last.
    #[default]
    Ratio,
    /// `gamma_k = w` at every step.
    Fixed,
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ratio" => Ok(Self::Ratio),
            "fixed" => Ok(Self::Fixed),
            other => Err(Error::InvalidSchedule(format!(
                "unknown schedule kind `{other}` (expected ratio or fixed)"
            ))),
        }
    }
}

impl std::fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ratio => "ratio",
            Self::Fixed => "fixed",
        })
    }
}

/// Progressive token-map resolutions together with the per-step guidance scales.
///
/// `gamma_k = 1 + lambda_k` holds for both schedule kinds. Under the ratio kind
/// `lambda_k = w * k / (K - 1)` with `k` in `0..K`; under the fixed kind
/// `gamma_k = w`, so `lambda_k = w - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule")]
pub struct ScaleSchedule {
    scales: Vec<Scale>,
    weight: f64,
    secondary_weight: Option<f64>,
    kind: ScheduleKind,
}

impl ScaleSchedule {
    pub fn new(
        scales: Vec<Scale>,
        weight: f64,
        secondary_weight: Option<f64>,
        kind: ScheduleKind,
    ) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::InvalidSchedule("no steps".into()));
        }
        if let Some(bad) = scales.iter().find(|s| s.h == 0 || s.w == 0) {
            return Err(Error::InvalidSchedule(format!("degenerate scale {bad}")));
        }
        if let Some(pair) = scales.windows(2).find(|p| p[1].area() < p[0].area()) {
            return Err(Error::InvalidSchedule(format!(
                "resolutions must be non-decreasing, {} follows {}",
                pair[1], pair[0]
            )));
        }
        if !weight.is_finite() || secondary_weight.is_some_and(|w| !w.is_finite()) {
            return Err(Error::InvalidSchedule("guidance weights must be finite".into()));
        }
        Ok(Self {
            scales,
            weight,
            secondary_weight,
            kind,
        })
    }

    /// Square scales with the given side lengths.
    pub fn from_sides(
        sides: &[usize],
        weight: f64,
        secondary_weight: Option<f64>,
        kind: ScheduleKind,
    ) -> Result<Self> {
        Self::new(
            sides.iter().map(|&s| Scale::square(s)).collect(),
            weight,
            secondary_weight,
            kind,
        )
    }

    /// The desk-scale default: six square scales (1, 2, 4, 6, 8, 12).
    pub fn default_sides() -> &'static [usize] {
        &[1, 2, 4, 6, 8, 12]
    }

    pub fn scales(&self) -> &[Scale] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn final_scale(&self) -> Scale {
        *self.scales.last().expect("schedule is non-empty")
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn secondary_weight(&self) -> Option<f64> {
        self.secondary_weight
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    /// Fraction `k / (K - 1)`; a single-step schedule sits at 0.
    fn progress(&self, k: usize) -> f64 {
        let last = self.scales.len() - 1;
        if last == 0 {
            0.0
        } else {
            k as f64 / last as f64
        }
    }

    pub fn lambda(&self, k: usize) -> f64 {
        scheduled_lambda(self.kind, self.weight, self.progress(k))
    }

    pub fn gamma(&self, k: usize) -> f64 {
        1.0 + self.lambda(k)
    }

    /// Secondary (attention-weighted) scale of the mixed scheme; the same
    /// schedule kind is applied to `w'`. Zero when no secondary weight is set.
    pub fn secondary_gamma(&self, k: usize) -> f64 {
        match self.secondary_weight {
            Some(w2) => 1.0 + scheduled_lambda(self.kind, w2, self.progress(k)),
            None => 0.0,
        }
    }

    pub fn with_weights(&self, weight: f64, secondary_weight: Option<f64>) -> Result<Self> {
        Self::new(self.scales.clone(), weight, secondary_weight, self.kind)
    }
}

#[derive(Deserialize)]
struct RawSchedule {
    scales: Vec<Scale>,
    weight: f64,
    secondary_weight: Option<f64>,
    kind: ScheduleKind,
}

impl TryFrom<RawSchedule> for ScaleSchedule {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        Self::new(raw.scales, raw.weight, raw.secondary_weight, raw.kind)
    }
}

fn scheduled_lambda(kind: ScheduleKind, weight: f64, progress: f64) -> f64 {
    match kind {
        ScheduleKind::Ratio => weight * progress,
        ScheduleKind::Fixed => weight - 1.0,
    }
}

fn check_shape(tensor: &'static str, height: usize, width: usize, vocab: VocabSpec, len: usize) -> Result<()> {
    let expected = height * width * vocab.size();
    if height == 0 || width == 0 || len != expected {
        return Err(Error::ShapeMismatch {
            tensor,
            expected: format!("{height}x{width}x{} = {expected} values", vocab.size()),
            actual: format!("{len} values"),
        });
    }
    Ok(())
}

fn first_non_finite<T: Scalar>(values: &[T]) -> Option<usize> {
    values.iter().position(|v| !v.is_finite())
}

/// Per-position vocabulary logits for one scale.
///
/// Shape is validated on construction. Finiteness is checked by
/// [`LogitTensor::check_finite`] and [`validate_pair`], since tensors are
/// also ingested from external dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitTensor<T> {
    height: usize,
    width: usize,
    vocab: VocabSpec,
    values: Vec<T>,
}

impl<T: Scalar> LogitTensor<T> {
    pub fn new(height: usize, width: usize, vocab: VocabSpec, values: Vec<T>) -> Result<Self> {
        check_shape("logits", height, width, vocab, values.len())?;
        Ok(Self {
            height,
            width,
            vocab,
            values,
        })
    }

    pub fn zeros(height: usize, width: usize, vocab: VocabSpec) -> Self {
        Self {
            height,
            width,
            vocab,
            values: vec![T::zero(); height * width * vocab.size()],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn scale(&self) -> Scale {
        Scale::new(self.height, self.width)
    }

    pub fn positions(&self) -> usize {
        self.height * self.width
    }

    pub fn vocab(&self) -> VocabSpec {
        self.vocab
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Logits at grid position `pos` (row-major index).
    pub fn row(&self, pos: usize) -> &[T] {
        let v = self.vocab.size();
        &self.values[pos * v..(pos + 1) * v]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.values.chunks_exact(self.vocab.size())
    }

    pub fn check_finite(&self, name: &'static str) -> Result<()> {
        match first_non_finite(&self.values) {
            Some(index) => Err(Error::NonFiniteValue {
                tensor: name,
                index,
            }),
            None => Ok(()),
        }
    }

    pub fn cast<U: Scalar>(&self) -> LogitTensor<U> {
        LogitTensor {
            height: self.height,
            width: self.width,
            vocab: self.vocab,
            values: self.values.iter().map(|v| U::of(v.to_f64_lossy())).collect(),
        }
    }

    /// Position-wise sum with a guidance field of the same shape.
    pub fn add_field(&self, field: &GuidanceField<T>) -> Result<Self> {
        if field.scale() != self.scale() || field.vocab() != self.vocab {
            return Err(Error::ShapeMismatch {
                tensor: "field",
                expected: format!("{}x{}", self.scale(), self.vocab.size()),
                actual: format!("{}x{}", field.scale(), field.vocab().size()),
            });
        }
        Ok(Self {
            height: self.height,
            width: self.width,
            vocab: self.vocab,
            values: self
                .values
                .iter()
                .zip(field.values())
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }
}

/// Check that an unconditional/conditional logit pair is usable for guidance.
pub fn validate_pair<T: Scalar>(uncond: &LogitTensor<T>, cond: &LogitTensor<T>) -> Result<()> {
    if uncond.scale() != cond.scale() || uncond.vocab != cond.vocab {
        return Err(Error::ShapeMismatch {
            tensor: "cond",
            expected: format!("{}x{} (from uncond)", uncond.scale(), uncond.vocab.size()),
            actual: format!("{}x{}", cond.scale(), cond.vocab.size()),
        });
    }
    uncond.check_finite("uncond")?;
    cond.check_finite("cond")
}

/// Signed per-position, per-token guidance nudge at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawField<T>", bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct GuidanceField<T> {
    height: usize,
    width: usize,
    vocab: VocabSpec,
    values: Vec<T>,
}

impl<T: Scalar> GuidanceField<T> {
    pub fn new(height: usize, width: usize, vocab: VocabSpec, values: Vec<T>) -> Result<Self> {
        check_shape("field", height, width, vocab, values.len())?;
        if let Some(index) = first_non_finite(&values) {
            return Err(Error::NonFiniteValue {
                tensor: "field",
                index,
            });
        }
        Ok(Self {
            height,
            width,
            vocab,
            values,
        })
    }

    pub(crate) fn from_parts(height: usize, width: usize, vocab: VocabSpec, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), height * width * vocab.size());
        Self {
            height,
            width,
            vocab,
            values,
        }
    }

    pub fn zeros(height: usize, width: usize, vocab: VocabSpec) -> Self {
        Self::from_parts(height, width, vocab, vec![T::zero(); height * width * vocab.size()])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn scale(&self) -> Scale {
        Scale::new(self.height, self.width)
    }

    pub fn positions(&self) -> usize {
        self.height * self.width
    }

    pub fn vocab(&self) -> VocabSpec {
        self.vocab
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, pos: usize) -> &[T] {
        let v = self.vocab.size();
        &self.values[pos * v..(pos + 1) * v]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.values.chunks_exact(self.vocab.size())
    }

    pub fn is_finite(&self) -> bool {
        first_non_finite(&self.values).is_none()
    }

    /// Per-position L2 norm over the vocabulary axis.
    pub fn magnitudes(&self) -> Vec<T> {
        self.rows()
            .map(|r| r.iter().map(|&x| x * x).sum::<T>().sqrt())
            .collect()
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self::from_parts(
            self.height,
            self.width,
            self.vocab,
            self.values.iter().map(|&x| x * factor).collect(),
        )
    }

    pub fn cast<U: Scalar>(&self) -> GuidanceField<U> {
        GuidanceField::from_parts(
            self.height,
            self.width,
            self.vocab,
            self.values.iter().map(|v| U::of(v.to_f64_lossy())).collect(),
        )
    }
}

#[derive(Deserialize)]
struct RawField<T> {
    height: usize,
    width: usize,
    vocab: VocabSpec,
    values: Vec<T>,
}

impl<T: Scalar> TryFrom<RawField<T>> for GuidanceField<T> {
    type Error = Error;

    fn try_from(raw: RawField<T>) -> Result<Self> {
        Self::new(raw.height, raw.width, raw.vocab, raw.values)
    }
}

/// An `h x w` grid of token ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTokenMap")]
pub struct TokenMap {
    height: usize,
    width: usize,
    tokens: Vec<u32>,
}

impl TokenMap {
    pub fn new(height: usize, width: usize, tokens: Vec<u32>, vocab: VocabSpec) -> Result<Self> {
        if tokens.len() != height * width {
            return Err(Error::ShapeMismatch {
                tensor: "token map",
                expected: format!("{height}x{width} = {} tokens", height * width),
                actual: format!("{} tokens", tokens.len()),
            });
        }
        if let Some((position, &token)) = tokens
            .iter()
            .enumerate()
            .find(|(_, &t)| t as usize >= vocab.size())
        {
            return Err(Error::TokenOutOfRange {
                token,
                position,
                vocab: vocab.size(),
            });
        }
        Ok(Self {
            height,
            width,
            tokens,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn scale(&self) -> Scale {
        Scale::new(self.height, self.width)
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.tokens[row * self.width + col]
    }
}

#[derive(Deserialize)]
struct RawTokenMap {
    height: usize,
    width: usize,
    tokens: Vec<u32>,
}

impl TryFrom<RawTokenMap> for TokenMap {
    type Error = Error;

    fn try_from(raw: RawTokenMap) -> Result<Self> {
        if raw.height == 0 || raw.width == 0 || raw.tokens.len() != raw.height * raw.width {
            return Err(Error::ShapeMismatch {
                tensor: "token map",
                expected: format!("{}x{} tokens", raw.height, raw.width),
                actual: format!("{} tokens", raw.tokens.len()),
            });
        }
        Ok(Self {
            height: raw.height,
            width: raw.width,
            tokens: raw.tokens,
        })
    }
}

/// Binary foreground mask; `true` marks semantically important pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl SegMask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 || bits.len() != height * width {
            return Err(Error::InvalidDims(format!(
                "mask {height}x{width} needs {} bits, got {}",
                height * width,
                bits.len()
            )));
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let bits = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        Self {
            height,
            width,
            bits,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn scale(&self) -> Scale {
        Scale::new(self.height, self.width)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn foreground_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn background_count(&self) -> usize {
        self.bits.len() - self.foreground_count()
    }
}
