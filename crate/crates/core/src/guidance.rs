//! Guidance schemes operating on raw logits.
//!
//! Classifier-free guidance extrapolates from the unconditional towards the
//! conditional logits. Written in nudge form it adds
//! `gamma_k * (cond - uncond)` to the unconditional logits. Information-grounding
//! guidance (IGG) instead adds `A * nudge`, where `A` is a parameter-free
//! self-attention over the nudges themselves:
//! `A = softmax(G G^T / sqrt(|V|))` with `G` the `(h*w) x |V|` nudge matrix and
//! the softmax taken over each row.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{validate_pair, GuidanceField, LogitTensor, Scale, ScaleSchedule, VocabSpec};

/// Row-stochastic `n x n` attention matrix over grid positions.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMatrix<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> AttentionMatrix<T> {
    pub fn identity(n: usize) -> Self {
        let mut values = vec![T::zero(); n * n];
        for i in 0..n {
            values[i * n + i] = T::one();
        }
        Self { n, values }
    }

    /// Build from raw row-major values, checking that rows are probability vectors.
    pub fn from_rows(n: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::ShapeMismatch {
                tensor: "attention",
                expected: format!("{n}x{n}"),
                actual: format!("{} values", values.len()),
            });
        }
        let tol = T::of(1e-9);
        for (i, row) in values.chunks_exact(n.max(1)).enumerate() {
            let sum: T = row.iter().copied().sum();
            if row.iter().any(|&x| !(x >= T::zero()) || x > T::one()) || (sum - T::one()).abs() > tol {
                return Err(Error::InvalidDistribution(format!(
                    "attention row {i} is not a probability vector"
                )));
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    /// `A * F` over flattened grid rows.
    pub fn apply(&self, field: &GuidanceField<T>) -> Result<GuidanceField<T>> {
        if field.positions() != self.n {
            return Err(Error::ShapeMismatch {
                tensor: "field",
                expected: format!("{} positions", self.n),
                actual: format!("{} positions", field.positions()),
            });
        }
        let v = field.vocab().size();
        let mut out = vec![T::zero(); self.n * v];
        for (i, out_row) in out.chunks_exact_mut(v).enumerate() {
            for (j, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (o, &f) in out_row.iter_mut().zip(field.row(j)) {
                    *o = *o + a * f;
                }
            }
        }
        Ok(GuidanceField::from_parts(
            field.height(),
            field.width(),
            field.vocab(),
            out,
        ))
    }
}

/// Side length of the square attention window in the windowed IGG variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowRule {
    /// Same side length at every scale.
    Fixed(usize),
    /// `round(sqrt(h_k * w_k))`, at least 1.
    GeometricMean,
}

impl WindowRule {
    pub fn side(self, scale: Scale) -> usize {
        match self {
            WindowRule::Fixed(s) => s,
            WindowRule::GeometricMean => ((scale.area() as f64).sqrt().round() as usize).max(1),
        }
    }
}

impl Default for WindowRule {
    fn default() -> Self {
        WindowRule::GeometricMean
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Sample from the conditional logits.
    #[default]
    None,
    Cfg,
    Igg,
    Mixed,
    IggWindow,
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => Self::None,
            "cfg" => Self::Cfg,
            "igg" => Self::Igg,
            "mixed" => Self::Mixed,
            "igg-window" | "igg_window" | "igg-windowed" => Self::IggWindow,
            other => {
                return Err(Error::InvalidScheme(format!(
                    "unknown scheme `{other}` (expected none, cfg, igg, igg-window or mixed)"
                )))
            }
        })
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Cfg => "cfg",
            Self::Igg => "igg",
            Self::Mixed => "mixed",
            Self::IggWindow => "igg-window",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GuidanceScheme {
    pub kind: SchemeKind,
    pub window: WindowRule,
}

impl GuidanceScheme {
    pub fn new(kind: SchemeKind) -> Self {
        Self {
            kind,
            window: WindowRule::default(),
        }
    }

    pub fn windowed(window: WindowRule) -> Result<Self> {
        if window == WindowRule::Fixed(0) {
            return Err(Error::InvalidScheme("window size must be at least 1".into()));
        }
        Ok(Self {
            kind: SchemeKind::IggWindow,
            window,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == SchemeKind::IggWindow && self.window == WindowRule::Fixed(0) {
            return Err(Error::InvalidScheme("window size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of guiding one step: the logits to sample from and the nudge that
/// was added to the unconditional logits to obtain them.
#[derive(Debug, Clone)]
pub struct GuidedStep<T> {
    pub logits: LogitTensor<T>,
    pub field: GuidanceField<T>,
}

fn difference<T: Scalar>(uncond: &LogitTensor<T>, cond: &LogitTensor<T>, gamma: T) -> GuidanceField<T> {
    let values = cond
        .values()
        .iter()
        .zip(uncond.values())
        .map(|(&c, &u)| gamma * (c - u))
        .collect();
    GuidanceField::from_parts(uncond.height(), uncond.width(), uncond.vocab(), values)
}

/// Guidance nudge `gamma_k * (cond - uncond)`.
pub fn nudge<T: Scalar>(uncond: &LogitTensor<T>, cond: &LogitTensor<T>, gamma_k: T) -> Result<GuidanceField<T>> {
    validate_pair(uncond, cond)?;
    Ok(difference(uncond, cond, gamma_k))
}

/// Classifier-free guidance in extrapolation form, `(1 + lambda_k) cond - lambda_k uncond`.
pub fn cfg_guide<T: Scalar>(uncond: &LogitTensor<T>, cond: &LogitTensor<T>, lambda_k: T) -> Result<LogitTensor<T>> {
    validate_pair(uncond, cond)?;
    let one_plus = T::one() + lambda_k;
    let values = cond
        .values()
        .iter()
        .zip(uncond.values())
        .map(|(&c, &u)| one_plus * c - lambda_k * u)
        .collect();
    LogitTensor::new(uncond.height(), uncond.width(), uncond.vocab(), values)
}

/// Self-attention over the nudges, `softmax(G G^T / sqrt(|V|))` row-wise.
pub fn attention_weights<T: Scalar>(field: &GuidanceField<T>, vocab: VocabSpec) -> Result<AttentionMatrix<T>> {
    masked_attention(field, vocab, None)
}

/// Attention restricted to a square window of side `window` centred on each
/// query position: keys at Chebyshev grid distance above `window / 2` get zero weight.
pub fn attention_weights_windowed<T: Scalar>(
    field: &GuidanceField<T>,
    vocab: VocabSpec,
    window: usize,
) -> Result<AttentionMatrix<T>> {
    if window == 0 {
        return Err(Error::InvalidScheme("window size must be at least 1".into()));
    }
    masked_attention(field, vocab, Some(window / 2))
}

fn masked_attention<T: Scalar>(
    field: &GuidanceField<T>,
    vocab: VocabSpec,
    half_window: Option<usize>,
) -> Result<AttentionMatrix<T>> {
    if field.vocab() != vocab {
        return Err(Error::ShapeMismatch {
            tensor: "field",
            expected: format!("vocabulary {}", vocab.size()),
            actual: format!("vocabulary {}", field.vocab().size()),
        });
    }
    if !field.is_finite() {
        let index = field.values().iter().position(|v| !v.is_finite()).unwrap_or(0);
        return Err(Error::NonFiniteValue {
            tensor: "field",
            index,
        });
    }
    let n = field.positions();
    let width = field.width();
    let inv_temp = T::one() / vocab.sqrt_size::<T>();
    let in_window = |i: usize, j: usize| match half_window {
        None => true,
        Some(half) => {
            let (ri, ci) = (i / width, i % width);
            let (rj, cj) = (j / width, j % width);
            ri.abs_diff(rj).max(ci.abs_diff(cj)) <= half
        }
    };

    let mut values = vec![T::zero(); n * n];
    for (i, out) in values.chunks_exact_mut(n).enumerate() {
        let query = field.row(i);
        let mut max = T::neg_infinity();
        for (j, slot) in out.iter_mut().enumerate() {
            if !in_window(i, j) {
                *slot = T::neg_infinity();
                continue;
            }
            let dot: T = query.iter().zip(field.row(j)).map(|(&a, &b)| a * b).sum();
            let score = dot * inv_temp;
            if !score.is_finite() {
                return Err(Error::NonFiniteValue {
                    tensor: "attention scores",
                    index: i * n + j,
                });
            }
            *slot = score;
            max = max.max(score);
        }
        let mut total = T::zero();
        for slot in out.iter_mut() {
            *slot = if *slot == T::neg_infinity() {
                T::zero()
            } else {
                (*slot - max).exp()
            };
            total = total + *slot;
        }
        for slot in out.iter_mut() {
            *slot = *slot / total;
        }
    }
    Ok(AttentionMatrix { n, values })
}

/// Attention-weighted nudge `A F`, with `F = gamma_k (cond - uncond)`.
pub fn igg_field<T: Scalar>(
    uncond: &LogitTensor<T>,
    cond: &LogitTensor<T>,
    gamma_k: T,
    vocab: VocabSpec,
    window: Option<usize>,
) -> Result<GuidanceField<T>> {
    let field = nudge(uncond, cond, gamma_k)?;
    let attention = match window {
        None => attention_weights(&field, vocab)?,
        Some(w) => attention_weights_windowed(&field, vocab, w)?,
    };
    attention.apply(&field)
}

/// Information-grounding guidance: `uncond + A F`.
pub fn igg_guide<T: Scalar>(
    uncond: &LogitTensor<T>,
    cond: &LogitTensor<T>,
    gamma_k: T,
    vocab: VocabSpec,
) -> Result<LogitTensor<T>> {
    let field = igg_field(uncond, cond, gamma_k, vocab, None)?;
    uncond.add_field(&field)
}

/// IGG with scale-wise 2-D sliding-window attention.
pub fn igg_guide_windowed<T: Scalar>(
    uncond: &LogitTensor<T>,
    cond: &LogitTensor<T>,
    gamma_k: T,
    vocab: VocabSpec,
    window: WindowRule,
) -> Result<LogitTensor<T>> {
    let side = window.side(uncond.scale());
    let field = igg_field(uncond, cond, gamma_k, vocab, Some(side))?;
    uncond.add_field(&field)
}

/// Mixed nudge: `gamma_k (cond - uncond) + A' F'` with `F' = gamma_k' (cond - uncond)`
/// and `A'` the attention over `F'`.
pub fn mixed_field<T: Scalar>(
    uncond: &LogitTensor<T>,
    cond: &LogitTensor<T>,
    gamma_k: T,
    gamma_k_prime: T,
    vocab: VocabSpec,
) -> Result<GuidanceField<T>> {
    let cfg_part = nudge(uncond, cond, gamma_k)?;
    let igg_part = igg_field(uncond, cond, gamma_k_prime, vocab, None)?;
    let values = cfg_part
        .values()
        .iter()
        .zip(igg_part.values())
        .map(|(&a, &b)| a + b)
        .collect();
    Ok(GuidanceField::from_parts(
        uncond.height(),
        uncond.width(),
        uncond.vocab(),
        values,
    ))
}

/// Mixture of CFG and IGG, `uncond + gamma_k * cfg_component + gamma_k' * igg_component`.
pub fn mixed_guide<T: Scalar>(
    uncond: &LogitTensor<T>,
    cond: &LogitTensor<T>,
    gamma_k: T,
    gamma_k_prime: T,
    vocab: VocabSpec,
) -> Result<LogitTensor<T>> {
    let field = mixed_field(uncond, cond, gamma_k, gamma_k_prime, vocab)?;
    uncond.add_field(&field)
}

/// Guide step `k` of a schedule with `scheme`.
///
/// For `none` the conditional logits are returned unchanged; for `cfg` the
/// extrapolation form is used so that `lambda_k = 0` reproduces the
/// conditional logits exactly.
pub fn guide_step<T: Scalar>(
    scheme: &GuidanceScheme,
    schedule: &ScaleSchedule,
    k: usize,
    uncond: &LogitTensor<T>,
    cond: &LogitTensor<T>,
) -> Result<GuidedStep<T>> {
    scheme.validate()?;
    validate_pair(uncond, cond)?;
    let vocab = uncond.vocab();
    let gamma = T::of(schedule.gamma(k));
    match scheme.kind {
        SchemeKind::None => Ok(GuidedStep {
            logits: cond.clone(),
            field: difference(uncond, cond, T::one()),
        }),
        SchemeKind::Cfg => Ok(GuidedStep {
            logits: cfg_guide(uncond, cond, T::of(schedule.lambda(k)))?,
            field: difference(uncond, cond, gamma),
        }),
        SchemeKind::Igg | SchemeKind::IggWindow => {
            let window = (scheme.kind == SchemeKind::IggWindow).then(|| scheme.window.side(uncond.scale()));
            let field = igg_field(uncond, cond, gamma, vocab, window)?;
            Ok(GuidedStep {
                logits: uncond.add_field(&field)?,
                field,
            })
        }
        SchemeKind::Mixed => {
            let gamma_prime = T::of(schedule.secondary_gamma(k));
            let field = mixed_field(uncond, cond, gamma, gamma_prime, vocab)?;
            Ok(GuidedStep {
                logits: uncond.add_field(&field)?,
                field,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ScheduleKind;
    use approx::assert_abs_diff_eq;

    fn vocab(n: usize) -> VocabSpec {
        VocabSpec::new(n).unwrap()
    }

    fn tensor(h: usize, w: usize, v: usize, values: &[f64]) -> LogitTensor<f64> {
        LogitTensor::new(h, w, vocab(v), values.to_vec()).unwrap()
    }

    #[test]
    fn nudge_of_equal_logits_is_zero() {
        let z = LogitTensor::<f64>::zeros(2, 2, vocab(4));
        let f = nudge(&z, &z, 5.0).unwrap();
        assert!(f.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn nudge_forced_arithmetic() {
        let u = tensor(1, 1, 2, &[0.0, 0.0]);
        let c = tensor(1, 1, 2, &[1.0, 2.0]);
        assert_eq!(nudge(&u, &c, 2.0).unwrap().values(), &[2.0, 4.0]);
    }

    #[test]
    fn cfg_forced_arithmetic_and_identity() {
        let u = tensor(1, 1, 2, &[0.0, 1.0]);
        let c = tensor(1, 1, 2, &[1.0, 1.0]);
        assert_eq!(cfg_guide(&u, &c, 1.0).unwrap().values(), &[2.0, 1.0]);
        assert_eq!(cfg_guide(&u, &c, 0.0).unwrap(), c);
    }

    #[test]
    fn cfg_propagates_shape_mismatch() {
        let u = LogitTensor::<f64>::zeros(2, 2, vocab(4));
        let c = LogitTensor::<f64>::zeros(3, 3, vocab(4));
        assert!(matches!(cfg_guide(&u, &c, 1.0), Err(Error::ShapeMismatch { .. })));
        assert!(matches!(nudge(&u, &c, 1.0), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn ratio_schedule_first_step_is_conditional() {
        let sched = ScaleSchedule::from_sides(&[1, 2, 4], 1.75, None, ScheduleKind::Ratio).unwrap();
        let u = tensor(1, 1, 3, &[0.3, -1.0, 2.0]);
        let c = tensor(1, 1, 3, &[1.1, 0.25, -0.5]);
        let out = cfg_guide(&u, &c, sched.lambda(0)).unwrap();
        assert_eq!(out, c);
    }

    #[test]
    fn single_position_attention_is_one() {
        let f = GuidanceField::new(1, 1, vocab(3), vec![1.0, -2.0, 0.5]).unwrap();
        let a = attention_weights(&f, vocab(3)).unwrap();
        assert_eq!(a.values(), &[1.0]);
    }

    #[test]
    fn orthogonal_rows_hand_computed() {
        let f = GuidanceField::new(1, 2, vocab(4), vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let a = attention_weights(&f, vocab(4)).unwrap();
        let e = 0.5f64.exp();
        assert_abs_diff_eq!(a.get(0, 0), e / (e + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(a.get(0, 1), 1.0 / (e + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(a.get(0, 0), 0.6225, epsilon = 1e-4);
        assert_abs_diff_eq!(a.get(1, 1), a.get(0, 0), epsilon = 0.0);
    }

    #[test]
    fn identical_rows_give_uniform_attention() {
        let row = [0.4, -1.2, 3.0];
        let values: Vec<f64> = row.iter().copied().cycle().take(3 * 5).collect();
        let f = GuidanceField::new(1, 5, vocab(3), values).unwrap();
        let a = attention_weights(&f, vocab(3)).unwrap();
        for &x in a.values() {
            assert_abs_diff_eq!(x, 0.2, epsilon = 1e-15);
        }
    }

    #[test]
    fn attention_survives_huge_scores() {
        let f = GuidanceField::new(1, 2, vocab(2), vec![1e200, 0.0, 0.0, 1e-3]).unwrap();
        assert!(attention_weights(&f, vocab(2)).is_err());
        let f = GuidanceField::new(1, 2, vocab(2), vec![1e3, 0.0, 0.0, 1e-3]).unwrap();
        let a = attention_weights(&f, vocab(2)).unwrap();
        assert_eq!(a.get(0, 0), 1.0);
        assert!(a.values().iter().all(|x: &f64| x.is_finite()));
    }

    #[test]
    fn igg_with_zero_nudge_returns_uncond() {
        let u = tensor(1, 2, 2, &[0.5, -0.5, 1.0, 2.0]);
        let out = igg_guide(&u, &u, 7.0, vocab(2)).unwrap();
        assert_eq!(out, u);
    }

    #[test]
    fn igg_on_single_position_matches_cfg() {
        let u = tensor(1, 1, 3, &[0.3, -1.0, 2.0]);
        let c = tensor(1, 1, 3, &[1.1, 0.25, -0.5]);
        let igg = igg_guide(&u, &c, 2.5, vocab(3)).unwrap();
        let cfg = cfg_guide(&u, &c, 1.5).unwrap();
        for (a, b) in igg.values().iter().zip(cfg.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let win = igg_guide_windowed(&u, &c, 2.5, vocab(3), WindowRule::Fixed(5)).unwrap();
        assert_eq!(win, igg);
    }

    #[test]
    fn igg_two_position_brute_force() {
        // cond - uncond has orthogonal unit rows, gamma = 1
        let u = tensor(1, 2, 4, &[0.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0, -1.0]);
        let c = tensor(1, 2, 4, &[1.0, 1.0, 0.0, 0.0, 2.0, 1.0, 0.0, -1.0]);
        let out = igg_guide(&u, &c, 1.0, vocab(4)).unwrap();
        let e = 0.5f64.exp();
        let (a_self, a_other) = (e / (e + 1.0), 1.0 / (e + 1.0));
        let f = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]];
        let a = [[a_self, a_other], [a_other, a_self]];
        for i in 0..2 {
            for t in 0..4 {
                let expected = u.row(i)[t] + a[i][0] * f[0][t] + a[i][1] * f[1][t];
                assert_abs_diff_eq!(out.row(i)[t], expected, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn window_of_one_is_identity_attention() {
        let f = GuidanceField::new(3, 3, vocab(2), (0..18).map(|x| x as f64 * 0.1).collect()).unwrap();
        let a = attention_weights_windowed(&f, vocab(2), 1).unwrap();
        assert_eq!(a, AttentionMatrix::identity(9));
        assert!(attention_weights_windowed(&f, vocab(2), 0).is_err());
    }

    #[test]
    fn window_rule_sides() {
        assert_eq!(WindowRule::GeometricMean.side(Scale::new(4, 4)), 4);
        assert_eq!(WindowRule::GeometricMean.side(Scale::new(1, 1)), 1);
        assert_eq!(WindowRule::GeometricMean.side(Scale::new(2, 8)), 4);
        assert_eq!(WindowRule::Fixed(3).side(Scale::new(12, 12)), 3);
    }

    #[test]
    fn mixed_reduces_to_each_component() {
        let u = tensor(1, 2, 2, &[0.1, 0.2, -0.3, 0.4]);
        let c = tensor(1, 2, 2, &[0.9, -0.2, 0.3, 1.4]);
        let m = mixed_guide(&u, &c, 1.5, 0.0, vocab(2)).unwrap();
        let expected: Vec<f64> = u
            .values()
            .iter()
            .zip(c.values())
            .map(|(&a, &b)| a + 1.5 * (b - a))
            .collect();
        assert_eq!(m.values(), expected.as_slice());
        let m = mixed_guide(&u, &c, 0.0, 1.85, vocab(2)).unwrap();
        let igg = igg_guide(&u, &c, 1.85, vocab(2)).unwrap();
        for (a, b) in m.values().iter().zip(igg.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!("igg-window".parse::<SchemeKind>().unwrap(), SchemeKind::IggWindow);
        assert_eq!("mixed".parse::<SchemeKind>().unwrap(), SchemeKind::Mixed);
        assert!("cfg++".parse::<SchemeKind>().is_err());
        assert!(GuidanceScheme::windowed(WindowRule::Fixed(0)).is_err());
    }

    #[test]
    fn guide_step_none_passes_conditional_through() {
        let sched = ScaleSchedule::from_sides(&[1, 2], 3.0, None, ScheduleKind::Ratio).unwrap();
        let u = tensor(1, 1, 2, &[0.1, 0.2]);
        let c = tensor(1, 1, 2, &[0.7, -0.2]);
        let step = guide_step(&GuidanceScheme::new(SchemeKind::None), &sched, 0, &u, &c).unwrap();
        assert_eq!(step.logits, c);
    }

    #[test]
    fn works_in_single_precision() {
        let u = LogitTensor::<f32>::new(1, 2, vocab(2), vec![0.0, 1.0, 0.5, 0.5]).unwrap();
        let c = LogitTensor::<f32>::new(1, 2, vocab(2), vec![1.0, 1.0, 0.5, 2.0]).unwrap();
        let out = igg_guide(&u, &c, 1.5f32, vocab(2)).unwrap();
        assert!(out.values().iter().all(|x| x.is_finite()));
        let a = attention_weights(&nudge(&u, &c, 1.5f32).unwrap(), vocab(2)).unwrap();
        for i in 0..2 {
            let s: f32 = a.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }
}
