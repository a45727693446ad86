use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelOracle;
use crate::error::{Error, Result};
use crate::guidance::{guide_step, GuidanceScheme};
use crate::metrics::{guidance_magnitudes, pielou_evenness};
use crate::record::{RunRecord, StepRecord};
use crate::tensor::{LogitTensor, ScaleSchedule, TokenMap};

/// Temperatures below this are treated as greedy decoding.
const GREEDY_TEMPERATURE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub scheme: GuidanceScheme,
    pub schedule: ScaleSchedule,
    pub temperature: f64,
    pub top_k: Option<usize>,
    pub seed: u64,
}

impl SamplerConfig {
    /// Temperature 1 and no top-k truncation.
    pub fn new(scheme: GuidanceScheme, schedule: ScaleSchedule, seed: u64) -> Self {
        Self {
            scheme,
            schedule,
            temperature: 1.0,
            top_k: None,
            seed,
        }
    }

    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        self.scheme.validate()?;
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::InvalidSampler(format!(
                "temperature must be positive and finite, got {}",
                self.temperature
            )));
        }
        match self.top_k {
            Some(0) => Err(Error::InvalidSampler("top-k must be at least 1".into())),
            Some(k) if k > vocab_size => Err(Error::InvalidSampler(format!(
                "top-k {k} exceeds vocabulary size {vocab_size}"
            ))),
            _ => Ok(()),
        }
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// Draw one token per position from `softmax(logits / temperature)`,
/// optionally restricted to the `top_k` highest logits.
pub fn sample_step<R: Rng + ?Sized>(logits: &LogitTensor<f64>, cfg: &SamplerConfig, rng: &mut R) -> Result<TokenMap> {
    let vocab = logits.vocab();
    cfg.validate(vocab.size())?;
    logits.check_finite("logits")?;
    let greedy = cfg.temperature < GREEDY_TEMPERATURE || cfg.top_k == Some(1);
    let mut candidates: Vec<usize> = Vec::with_capacity(vocab.size());
    let mut weights: Vec<f64> = Vec::with_capacity(vocab.size());
    let tokens = logits
        .rows()
        .map(|row| {
            if greedy {
                return argmax(row) as u32;
            }
            candidates.clear();
            candidates.extend(0..row.len());
            if let Some(k) = cfg.top_k.filter(|&k| k < row.len()) {
                // stable: ties keep the lower id first
                candidates.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
                candidates.truncate(k);
            }
            let max = candidates.iter().map(|&t| row[t]).fold(f64::NEG_INFINITY, f64::max);
            weights.clear();
            weights.extend(candidates.iter().map(|&t| ((row[t] - max) / cfg.temperature).exp()));
            let total: f64 = weights.iter().sum();
            let mut target = rng.random::<f64>() * total;
            for (&t, &w) in candidates.iter().zip(&weights) {
                if target < w {
                    return t as u32;
                }
                target -= w;
            }
            // rounding left a sliver past the last bucket
            *candidates.last().expect("vocabulary is non-empty") as u32
        })
        .collect();
    TokenMap::new(logits.height(), logits.width(), tokens, vocab)
}

/// Run the autoregressive loop over every scale of the schedule.
///
/// Each step queries conditional and unconditional logits, guides them with
/// the configured scheme, samples a token map and records the applied nudge.
/// Steps after the first with more than one position get an evenness score;
/// an all-zero nudge leaves the score empty.
pub fn run_sampling(oracle: &dyn ModelOracle, cfg: &SamplerConfig, condition: u32) -> Result<RunRecord> {
    if cfg.schedule.scales() != oracle.scales() {
        return Err(Error::ScheduleMismatch(format!(
            "sampler schedule {:?} differs from oracle schedule {:?}",
            cfg.schedule.scales(),
            oracle.scales()
        )));
    }
    let vocab = oracle.vocab();
    cfg.validate(vocab.size())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history: Vec<TokenMap> = Vec::with_capacity(cfg.schedule.len());
    let mut steps = Vec::with_capacity(cfg.schedule.len());
    for (k, scale) in cfg.schedule.scales().iter().enumerate() {
        let cond = oracle.next_logits(k, &history, Some(condition))?;
        let uncond = oracle.next_logits(k, &history, None)?;
        if cond.scale() != *scale || cond.vocab() != vocab {
            return Err(Error::OracleFailure(format!(
                "step {k}: oracle returned {}x{} logits, expected {scale}x{}",
                cond.scale(),
                cond.vocab().size(),
                vocab.size()
            )));
        }
        let guided = guide_step(&cfg.scheme, &cfg.schedule, k, &uncond, &cond)?;
        let token_map = sample_step(&guided.logits, cfg, &mut rng)?;
        let evenness = if k >= 1 && scale.area() >= 2 {
            match guidance_magnitudes(&guided.field) {
                Ok(dist) => Some(pielou_evenness(&dist)?),
                Err(Error::AllZeroField) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        history.push(token_map.clone());
        steps.push(StepRecord {
            token_map,
            field: guided.field,
            evenness,
            divergence: None,
        });
    }
    RunRecord::new(cfg.schedule.clone(), cfg.scheme, condition, cfg.seed, steps)
}
