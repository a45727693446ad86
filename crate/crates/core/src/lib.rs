//! Guidance for scale-wise autoregressive (next-scale prediction) token sampling.
//!
//! The crate implements classifier-free guidance (CFG), attention-weighted
//! information-grounding guidance (IGG) with its windowed and mixed variants,
//! and two diagnostics of where guidance lands: evenness (normalised entropy of
//! per-token guidance strength) and divergence (Jensen-Shannon distance between
//! foreground guidance and a background resample).
//!
//! The numerical core ([`tensor`], [`guidance`], [`metrics`]) is generic over
//! [`Scalar`] (`f32` or `f64`); the sampling loop and file formats work in `f64`.

pub mod error;
pub mod guidance;
pub mod io;
pub mod metrics;
pub mod record;
pub mod scalar;
pub mod sim;
pub mod tensor;

pub use error::{Error, Result};
pub use guidance::{
    attention_weights, attention_weights_windowed, cfg_guide, guide_step, igg_guide, igg_guide_windowed,
    mixed_guide, nudge, AttentionMatrix, GuidanceScheme, SchemeKind, WindowRule,
};
pub use metrics::{
    divergence_score, downsample_mask, guidance_magnitudes, jsd, pielou_evenness, weighted_mean_scores,
    StepScores, TokenGuidanceDist,
};
pub use record::{AggregateScores, RunRecord, StepRecord};
pub use scalar::Scalar;
pub use sim::{run_sampling, ModelOracle, SamplerConfig, SceneOracle, SceneOracleConfig};
pub use tensor::{
    validate_pair, GuidanceField, LogitTensor, Scale, ScaleSchedule, ScheduleKind, SegMask, TokenMap, VocabSpec,
};

pub type LogitTensorF32 = LogitTensor<f32>;
pub type LogitTensorF64 = LogitTensor<f64>;
pub type GuidanceFieldF32 = GuidanceField<f32>;
pub type GuidanceFieldF64 = GuidanceField<f64>;
pub type AttentionMatrixF32 = AttentionMatrix<f32>;
pub type AttentionMatrixF64 = AttentionMatrix<f64>;
pub type TokenGuidanceDistF32 = TokenGuidanceDist<f32>;
pub type TokenGuidanceDistF64 = TokenGuidanceDist<f64>;
