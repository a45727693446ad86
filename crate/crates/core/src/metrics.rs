//! Diagnostics of where guidance lands on a token map.
//!
//! * Evenness: Pielou's index (normalised Shannon entropy, natural log) of the
//!   per-position guidance-magnitude distribution. Lower means guidance is
//!   concentrated on fewer tokens.
//! * Divergence: resolution-weighted Jensen-Shannon distance (base-2 logs,
//!   range `[0, 1]`) between the guidance on foreground tokens and a synthetic
//!   "unguided" sample drawn with replacement from background tokens.
//!
//! The first (1x1) step is never scored.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::RunRecord;
use crate::scalar::Scalar;
use crate::tensor::{GuidanceField, Scale, SegMask};

/// A probability vector over the positions of one token map (or over the
/// bins of a magnitude histogram).
#[derive(Debug, Clone, PartialEq)]
pub struct TokenGuidanceDist<T> {
    probs: Vec<T>,
}

impl<T: Scalar> TokenGuidanceDist<T> {
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(i) = probs.iter().position(|&p| !(p >= T::zero()) || !p.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is negative or non-finite"
            )));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > T::of(1e-9) {
            return Err(Error::InvalidDistribution(format!("sums to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Normalise nonnegative weights. Fails when they are all zero.
    pub fn from_weights(weights: &[T]) -> Result<Self> {
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(Error::AllZeroField);
        }
        Self::new(weights.iter().map(|&w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![T::one() / T::of_usize(n); n],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }
}

/// Per-position L2 norm of the nudge, normalised to sum to one.
pub fn guidance_magnitudes<T: Scalar>(field: &GuidanceField<T>) -> Result<TokenGuidanceDist<T>> {
    if !field.is_finite() {
        let index = field.values().iter().position(|v| !v.is_finite()).unwrap_or(0);
        return Err(Error::NonFiniteValue {
            tensor: "field",
            index,
        });
    }
    TokenGuidanceDist::from_weights(&field.magnitudes())
}

/// Pielou evenness `H(p) / ln(n)` with natural-log entropy.
pub fn pielou_evenness<T: Scalar>(dist: &TokenGuidanceDist<T>) -> Result<T> {
    let n = dist.len();
    if n < 2 {
        return Err(Error::SingleTokenMap);
    }
    let probs = dist.probs();
    // exact for the uniform case
    if probs.iter().all(|&p| p == probs[0]) {
        return Ok(T::one());
    }
    let entropy: T = probs
        .iter()
        .filter(|&&p| p > T::zero())
        .map(|&p| -p * p.ln())
        .sum();
    let evenness = entropy / T::of_usize(n).ln();
    Ok(evenness.max(T::zero()).min(T::one()))
}

fn kl_to_mixture<T: Scalar>(p: &[T], m: &[T]) -> T {
    p.iter()
        .zip(m)
        .filter(|(&pi, _)| pi > T::zero())
        .map(|(&pi, &mi)| pi * (pi / mi).log2())
        .sum()
}

/// Jensen-Shannon distance with base-2 logarithms, so the result lies in `[0, 1]`.
pub fn jsd<T: Scalar>(p: &TokenGuidanceDist<T>, q: &TokenGuidanceDist<T>) -> Result<T> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    let half = T::of(0.5);
    let m: Vec<T> = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(&a, &b)| half * (a + b))
        .collect();
    let divergence = half * (kl_to_mixture(p.probs(), &m) + kl_to_mixture(q.probs(), &m));
    Ok(divergence.max(T::zero()).min(T::one()).sqrt())
}

/// Per-step scores; `weight` is the step's resolution `h_k * w_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepScores {
    pub step: usize,
    pub evenness: Option<f64>,
    pub divergence: Option<f64>,
    pub weight: f64,
}

/// Resolution-weighted means of the present evenness and divergence scores.
///
/// Fails when no step carries an evenness score. The divergence mean is
/// `None` when no step carries a divergence score.
pub fn weighted_mean_scores(steps: &[StepScores]) -> Result<(f64, Option<f64>)> {
    let mean = |pick: fn(&StepScores) -> Option<f64>| {
        let (num, den) = steps
            .iter()
            .filter_map(|s| pick(s).map(|v| (s.weight * v, s.weight)))
            .fold((0.0, 0.0), |(n, d), (a, b)| (n + a, d + b));
        (den > 0.0).then(|| num / den)
    };
    let evenness = mean(|s| s.evenness).ok_or(Error::NoScoredSteps)?;
    Ok((evenness, mean(|s| s.divergence)))
}

/// Area-interpolate `mask` down to `h x w`, then threshold at one half.
///
/// Each output cell covers a (possibly fractional) rectangle of source pixels
/// and is foreground when at least half of that area is foreground. Overlaps
/// are computed in integer units of `1 / (h * w)` source pixels, so the
/// threshold comparison is exact.
pub fn downsample_mask(mask: &SegMask, h: usize, w: usize) -> Result<SegMask> {
    let (src_h, src_w) = (mask.height(), mask.width());
    if h == 0 || w == 0 || h > src_h || w > src_w {
        return Err(Error::InvalidDims(format!(
            "cannot downsample a {src_h}x{src_w} mask to {h}x{w}"
        )));
    }
    // source pixel y spans [y*h, (y+1)*h); output row i spans [i*src_h, (i+1)*src_h)
    let overlap = |pix: usize, pix_len: usize, cell: usize, cell_len: usize| -> u64 {
        let (a0, a1) = (pix * pix_len, (pix + 1) * pix_len);
        let (b0, b1) = (cell * cell_len, (cell + 1) * cell_len);
        a1.min(b1).saturating_sub(a0.max(b0)) as u64
    };
    let cell_area = (src_h * src_w) as u64;
    Ok(SegMask::from_fn(h, w, |i, j| {
        let rows = (i * src_h) / h..((i + 1) * src_h).div_ceil(h).min(src_h);
        let cols = (j * src_w) / w..((j + 1) * src_w).div_ceil(w).min(src_w);
        let mut covered = 0u64;
        for y in rows {
            let oy = overlap(y, h, i, src_h);
            if oy == 0 {
                continue;
            }
            for x in cols.clone() {
                if mask.get(y, x) {
                    covered += oy * overlap(x, w, j, src_w);
                }
            }
        }
        2 * covered >= cell_area
    }))
}

/// Number of histogram bins for a map of `n` positions: `max(2, ceil(sqrt(n)))`.
pub fn histogram_bins(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(2)
}

fn magnitude_histogram<T: Scalar>(
    magnitudes: &[T],
    positions: impl Iterator<Item = usize>,
    max: T,
    bins: usize,
) -> Result<TokenGuidanceDist<T>> {
    let mut counts = vec![T::zero(); bins];
    let scale = T::of_usize(bins);
    for pos in positions {
        let bin = if max > T::zero() {
            (magnitudes[pos] / max * scale)
                .floor()
                .to_usize()
                .unwrap_or(0)
                .min(bins - 1)
        } else {
            0
        };
        counts[bin] = counts[bin] + T::one();
    }
    TokenGuidanceDist::from_weights(&counts)
}

/// Jensen-Shannon distance for one step.
///
/// The guided distribution is the histogram of guidance magnitudes over the
/// foreground positions of `mask` (already at the field's resolution); the
/// unguided one is the histogram of `h * w` magnitudes drawn with replacement
/// from background positions. Both histograms share `histogram_bins(h * w)`
/// equal-width bins over `[0, max magnitude]`.
///
/// Returns `None` when the mask has no foreground or no background at this scale.
pub fn step_divergence<T: Scalar, R: Rng + ?Sized>(
    field: &GuidanceField<T>,
    mask: &SegMask,
    rng: &mut R,
) -> Result<Option<T>> {
    if mask.scale() != field.scale() {
        return Err(Error::InvalidDims(format!(
            "mask {} does not match field {}",
            mask.scale(),
            field.scale()
        )));
    }
    let magnitudes = field.magnitudes();
    let foreground: Vec<usize> = (0..magnitudes.len()).filter(|&i| mask.bits()[i]).collect();
    let background: Vec<usize> = (0..magnitudes.len()).filter(|&i| !mask.bits()[i]).collect();
    if foreground.is_empty() || background.is_empty() {
        return Ok(None);
    }
    let n = magnitudes.len();
    let bins = histogram_bins(n);
    let max = magnitudes.iter().copied().fold(T::zero(), T::max);
    let guided = magnitude_histogram(&magnitudes, foreground.into_iter(), max, bins)?;
    let resampled: Vec<usize> = (0..n)
        .map(|_| background[rng.random_range(0..background.len())])
        .collect();
    let unguided = magnitude_histogram(&magnitudes, resampled.into_iter(), max, bins)?;
    jsd(&guided, &unguided).map(Some)
}

/// Per-step divergences of a run. Entry `k` is `None` for the first step and
/// for steps whose downsampled mask is all foreground or all background.
pub fn divergence_steps(run: &RunRecord, mask: &SegMask, seed: u64) -> Result<Vec<Option<f64>>> {
    let steps = run.steps();
    if steps.len() < 2 {
        return Err(Error::InvalidDims(format!(
            "divergence needs at least 2 steps, run has {}",
            steps.len()
        )));
    }
    let last: Scale = steps.last().expect("non-empty").field.scale();
    if mask.height() < last.h || mask.width() < last.w {
        return Err(Error::InvalidDims(format!(
            "mask {} is smaller than the final scale {last}",
            mask.scale()
        )));
    }
    if mask.background_count() == 0 {
        return Err(Error::EmptyBackground);
    }
    if mask.foreground_count() == 0 {
        return Err(Error::EmptyForeground);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![None];
    for step in &steps[1..] {
        let scale = step.field.scale();
        let small = downsample_mask(mask, scale.h, scale.w)?;
        out.push(step_divergence(&step.field, &small, &mut rng)?);
    }
    Ok(out)
}

/// Divergence score `J` of a run: the resolution-weighted mean of the
/// per-step Jensen-Shannon distances over steps `2..=K`.
///
/// Steps whose downsampled mask has no foreground or no background are left
/// out of the mean; if that leaves nothing, the run cannot be scored.
pub fn divergence_score(run: &RunRecord, mask: &SegMask, seed: u64) -> Result<f64> {
    let per_step = divergence_steps(run, mask, seed)?;
    let (num, den) = run
        .steps()
        .iter()
        .zip(&per_step)
        .filter_map(|(s, d)| d.map(|d| (d, s.field.positions() as f64)))
        .fold((0.0, 0.0), |(n, w), (d, weight)| (n + weight * d, w + weight));
    if den == 0.0 {
        return Err(Error::NoScoredSteps);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    use crate::tensor::VocabSpec;

    fn dist(p: &[f64]) -> TokenGuidanceDist<f64> {
        TokenGuidanceDist::new(p.to_vec()).unwrap()
    }

    fn entropy_oracle(p: &[f64]) -> f64 {
        let mut h = 0.0;
        for &x in p {
            if x > 0.0 {
                h -= x * x.ln();
            }
        }
        h
    }

    #[test]
    fn magnitudes_forced_arithmetic() {
        let f = GuidanceField::new(2, 1, VocabSpec::new(2).unwrap(), vec![3.0, 4.0, 0.0, 0.0]).unwrap();
        assert_eq!(guidance_magnitudes(&f).unwrap().probs(), &[1.0, 0.0]);
    }

    #[test]
    fn magnitudes_of_identical_rows_are_uniform() {
        let vals: Vec<f64> = [1.0, -2.0].iter().copied().cycle().take(12).collect();
        let f = GuidanceField::new(2, 3, VocabSpec::new(2).unwrap(), vals).unwrap();
        for &p in guidance_magnitudes(&f).unwrap().probs() {
            assert_abs_diff_eq!(p, 1.0 / 6.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_field_has_no_distribution() {
        let f = GuidanceField::<f64>::zeros(2, 2, VocabSpec::new(3).unwrap());
        assert!(matches!(guidance_magnitudes(&f), Err(Error::AllZeroField)));
    }

    #[test]
    fn evenness_extremes() {
        assert_eq!(pielou_evenness(&TokenGuidanceDist::<f64>::uniform(4)).unwrap(), 1.0);
        assert_eq!(pielou_evenness(&TokenGuidanceDist::<f64>::uniform(7)).unwrap(), 1.0);
        assert_eq!(pielou_evenness(&dist(&[0.0, 1.0, 0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn evenness_against_entropy_oracle() {
        let p = [0.5, 0.25, 0.125, 0.125];
        let h = entropy_oracle(&p);
        assert_abs_diff_eq!(h, 1.2130075659799042, epsilon = 1e-12);
        let e = pielou_evenness(&dist(&p)).unwrap();
        assert_abs_diff_eq!(e, h / 4f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(e, 0.875, epsilon = 1e-6);
    }

    #[test]
    fn evenness_rejects_single_token() {
        assert!(matches!(pielou_evenness(&dist(&[1.0])), Err(Error::SingleTokenMap)));
    }

    #[test]
    fn jsd_known_values() {
        let p = dist(&[0.3, 0.7]);
        assert_eq!(jsd(&p, &p).unwrap(), 0.0);
        assert_abs_diff_eq!(jsd(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap(), 1.0, epsilon = 1e-9);
        // KL terms by hand: m = (0.75, 0.25)
        let kl_p = 0.5 * (0.5f64 / 0.75).log2() + 0.5 * (0.5f64 / 0.25).log2();
        let kl_q = (1.0f64 / 0.75).log2();
        let expected = (0.5 * kl_p + 0.5 * kl_q).sqrt();
        let got = jsd(&dist(&[0.5, 0.5]), &dist(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(got, 0.5579, epsilon = 1e-4);
    }

    #[test]
    fn jsd_rejects_length_mismatch() {
        assert!(matches!(
            jsd(&dist(&[1.0]), &dist(&[0.5, 0.5])),
            Err(Error::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn weighted_means() {
        let s = |k, e: Option<f64>, d, w| StepScores {
            step: k,
            evenness: e,
            divergence: d,
            weight: w,
        };
        let steps = [s(0, None, None, 1.0), s(1, Some(0.4), None, 4.0), s(2, Some(0.8), Some(0.5), 16.0)];
        let (e, d) = weighted_mean_scores(&steps).unwrap();
        assert_abs_diff_eq!(e, 0.72, epsilon = 1e-15);
        assert_eq!(d, Some(0.5));
        let (e, _) = weighted_mean_scores(&[s(3, Some(0.31), None, 9.0)]).unwrap();
        assert_eq!(e, 0.31);
        let (e, _) = weighted_mean_scores(&[s(1, Some(0.2), None, 3.0), s(2, Some(0.6), None, 3.0)]).unwrap();
        assert_abs_diff_eq!(e, 0.4, epsilon = 1e-15);
        assert!(matches!(
            weighted_mean_scores(&[s(0, None, None, 1.0)]),
            Err(Error::NoScoredSteps)
        ));
    }

    #[test]
    fn downsample_all_true_and_halves() {
        let all = SegMask::from_fn(6, 6, |_, _| true);
        assert!(downsample_mask(&all, 4, 4).unwrap().bits().iter().all(|&b| b));
        let left = SegMask::from_fn(4, 4, |_, c| c < 2);
        let d = downsample_mask(&left, 2, 2).unwrap();
        assert_eq!(d.bits(), &[true, false, true, false]);
    }

    #[test]
    fn downsample_checkerboard_hits_threshold() {
        let board = SegMask::from_fn(4, 4, |r, c| (r + c) % 2 == 0);
        // pixel-count oracle: each 2x2 block holds exactly two true pixels
        for i in 0..2 {
            for j in 0..2 {
                let count = (0..2)
                    .flat_map(|y| (0..2).map(move |x| (2 * i + y, 2 * j + x)))
                    .filter(|&(y, x)| board.get(y, x))
                    .count();
                assert_eq!(count, 2);
            }
        }
        assert!(downsample_mask(&board, 2, 2).unwrap().bits().iter().all(|&b| b));
    }

    #[test]
    fn downsample_fractional_cells() {
        // 3 -> 2: each output cell covers 1.5 source pixels
        let m = SegMask::new(1, 3, vec![true, false, false]).unwrap();
        let d = downsample_mask(&m, 1, 2).unwrap();
        // cell 0 = pixel0 + half pixel1 => 1/1.5 true; cell 1 => 0
        assert_eq!(d.bits(), &[true, false]);
        let m = SegMask::new(1, 3, vec![false, true, false]).unwrap();
        // each cell sees half a true pixel out of 1.5 => 1/3 < 1/2
        assert_eq!(downsample_mask(&m, 1, 2).unwrap().bits(), &[false, false]);
    }

    #[test]
    fn downsample_rejects_upsampling() {
        let m = SegMask::from_fn(2, 2, |_, _| true);
        assert!(matches!(downsample_mask(&m, 3, 2), Err(Error::InvalidDims(_))));
    }

    #[test]
    fn histogram_bin_rule() {
        assert_eq!(histogram_bins(1), 2);
        assert_eq!(histogram_bins(4), 2);
        assert_eq!(histogram_bins(16), 4);
        assert_eq!(histogram_bins(17), 5);
        assert_eq!(histogram_bins(144), 12);
    }

    #[test]
    fn step_divergence_extremes() {
        let v = VocabSpec::new(2).unwrap();
        let mask = SegMask::from_fn(4, 4, |r, _| r < 2);
        let uniform = GuidanceField::new(4, 4, v, vec![1.0; 32]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(step_divergence(&uniform, &mask, &mut rng).unwrap(), Some(0.0));
        let vals: Vec<f64> = (0..16).flat_map(|p| if p < 8 { [2.0, 1.0] } else { [0.0, 0.0] }).collect();
        let fg_only = GuidanceField::new(4, 4, v, vals).unwrap();
        assert_eq!(step_divergence(&fg_only, &mask, &mut rng).unwrap(), Some(1.0));
        let no_bg = SegMask::from_fn(4, 4, |_, _| true);
        assert_eq!(step_divergence(&fg_only, &no_bg, &mut rng).unwrap(), None);
    }
}
