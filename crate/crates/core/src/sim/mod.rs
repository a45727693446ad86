//! Model side of a scale-wise autoregressive run: logit oracles and the
//! sampling loop that applies a guidance scheme and records everything.

mod replay;
mod sampler;
mod scene;

pub use replay::{replay_oracle, ReplayOracle};
pub use sampler::{run_sampling, sample_step, SamplerConfig};
pub use scene::{scene_logits, SceneOracle, SceneOracleConfig, Shape};

use crate::error::Result;
use crate::tensor::{LogitTensor, Scale, TokenMap, VocabSpec};

/// Source of per-scale logits.
///
/// `condition = None` requests the unconditional prediction. Implementations
/// must be deterministic: the same `(k, history, condition)` always yields the
/// same logits.
pub trait ModelOracle: Send + Sync {
    fn vocab(&self) -> VocabSpec;

    fn scales(&self) -> &[Scale];

    fn next_logits(&self, k: usize, history: &[TokenMap], condition: Option<u32>) -> Result<LogitTensor<f64>>;
}
