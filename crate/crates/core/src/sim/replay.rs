use std::path::Path;

use super::ModelOracle;
use crate::error::{Error, Result};
use crate::io::dump::{read_dump, LogitDump};
use crate::tensor::{LogitTensor, Scale, TokenMap, VocabSpec};

/// Serves pre-rolled logits from a dump. The dump fixes the trajectory, so
/// the history and the condition id are ignored; `None` selects the
/// unconditional tensor and any `Some(_)` the conditional one.
#[derive(Debug, Clone)]
pub struct ReplayOracle {
    dump: LogitDump,
    scales: Vec<Scale>,
}

impl ReplayOracle {
    pub fn new(dump: LogitDump) -> Self {
        let scales = dump.steps.iter().map(|s| s.scale).collect();
        Self { dump, scales }
    }

    pub fn dump(&self) -> &LogitDump {
        &self.dump
    }
}

pub fn replay_oracle(path: impl AsRef<Path>) -> Result<ReplayOracle> {
    Ok(ReplayOracle::new(read_dump(path)?))
}

impl ModelOracle for ReplayOracle {
    fn vocab(&self) -> VocabSpec {
        self.dump.vocab
    }

    fn scales(&self) -> &[Scale] {
        &self.scales
    }

    fn next_logits(&self, k: usize, _history: &[TokenMap], condition: Option<u32>) -> Result<LogitTensor<f64>> {
        let step = self.dump.steps.get(k).ok_or_else(|| {
            Error::OracleFailure(format!("dump holds {} steps, step {k} requested", self.dump.steps.len()))
        })?;
        let values = match condition {
            Some(_) => &step.cond,
            None => &step.uncond,
        };
        LogitTensor::new(
            step.scale.h,
            step.scale.w,
            self.dump.vocab,
            values.iter().map(|&x| x as f64).collect(),
        )
    }
}
