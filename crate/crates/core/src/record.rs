//! Persisted outcome of one sampling run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::guidance::GuidanceScheme;
use crate::metrics::StepScores;
use crate::tensor::{GuidanceField, ScaleSchedule, TokenMap};

/// One autoregressive step: the sampled map, the nudge that was applied and
/// its scores. The first step is never scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub token_map: TokenMap,
    pub field: GuidanceField<f64>,
    pub evenness: Option<f64>,
    pub divergence: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AggregateScores {
    pub evenness: Option<f64>,
    pub divergence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schedule: ScaleSchedule,
    pub scheme: GuidanceScheme,
    pub condition_id: u32,
    pub seed: u64,
    steps: Vec<StepRecord>,
    pub aggregate: AggregateScores,
}

impl RunRecord {
    /// Assemble a record; the step count must match the schedule and every
    /// step must sit at its scheduled resolution.
    pub fn new(
        schedule: ScaleSchedule,
        scheme: GuidanceScheme,
        condition_id: u32,
        seed: u64,
        steps: Vec<StepRecord>,
    ) -> Result<Self> {
        if steps.len() != schedule.len() {
            return Err(Error::ScheduleMismatch(format!(
                "{} recorded steps for a {}-step schedule",
                steps.len(),
                schedule.len()
            )));
        }
        for (k, (step, scale)) in steps.iter().zip(schedule.scales()).enumerate() {
            if step.field.scale() != *scale || step.token_map.scale() != *scale {
                return Err(Error::ScheduleMismatch(format!(
                    "step {k} recorded at {} but scheduled at {scale}",
                    step.field.scale()
                )));
            }
            let vocab = step.field.vocab();
            if let Some((position, &token)) = step
                .token_map
                .tokens()
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
            if !step.field.is_finite() {
                return Err(Error::NonFiniteValue {
                    tensor: "field",
                    index: k,
                });
            }
        }
        let mut record = Self {
            schedule,
            scheme,
            condition_id,
            seed,
            steps,
            aggregate: AggregateScores::default(),
        };
        record.refresh_aggregate();
        Ok(record)
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    pub fn step_scores(&self) -> Vec<StepScores> {
        self.steps
            .iter()
            .enumerate()
            .map(|(k, s)| StepScores {
                step: k,
                evenness: s.evenness,
                divergence: s.divergence,
                weight: s.field.positions() as f64,
            })
            .collect()
    }

    /// Store per-step divergences (entry 0 is ignored) and recompute aggregates.
    pub fn set_divergences(&mut self, per_step: &[Option<f64>]) -> Result<()> {
        if per_step.len() != self.steps.len() {
            return Err(Error::ScheduleMismatch(format!(
                "{} divergences for {} steps",
                per_step.len(),
                self.steps.len()
            )));
        }
        for (k, (step, &d)) in self.steps.iter_mut().zip(per_step).enumerate() {
            step.divergence = if k == 0 { None } else { d };
        }
        self.refresh_aggregate();
        Ok(())
    }

    fn refresh_aggregate(&mut self) {
        let scores = self.step_scores();
        let mean = |pick: fn(&StepScores) -> Option<f64>| {
            let (num, den) = scores
                .iter()
                .filter_map(|s| pick(s).map(|v| (s.weight * v, s.weight)))
                .fold((0.0, 0.0), |(n, d), (a, b)| (n + a, d + b));
            (den > 0.0).then(|| num / den)
        };
        self.aggregate = AggregateScores {
            evenness: mean(|s| s.evenness),
            divergence: mean(|s| s.divergence),
        };
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut bytes = serde_json::to_vec(self)?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let raw: RunRecord = serde_json::from_slice(bytes)?;
        // re-run construction checks on untrusted input
        let RunRecord {
            schedule,
            scheme,
            condition_id,
            seed,
            steps,
            aggregate,
        } = raw;
        let record = Self::new(schedule, scheme, condition_id, seed, steps)?;
        if record.aggregate != aggregate {
            return Err(Error::InvalidDistribution(
                "stored aggregate scores disagree with per-step scores".into(),
            ));
        }
        Ok(record)
    }
}
