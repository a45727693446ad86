//! Logit dump format.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "SWARLOG1"
//! 8       4     vocabulary size |V|, u32 LE
//! 12      4     step count K, u32 LE
//! then per step:
//!         4     h, u32 LE
//!         4     w, u32 LE
//!         4*h*w*|V|  conditional logits, f32 LE
//!         4*h*w*|V|  unconditional logits, f32 LE
//! ```
//!
//! Tensors are row-major over the grid with the vocabulary contiguous per
//! position. The file must end exactly after the last step.

use std::path::Path;

use super::FormatError;
use crate::error::{Error, Result};
use crate::sim::ModelOracle;
use crate::tensor::{Scale, VocabSpec};

pub const MAGIC: &[u8; 8] = b"SWARLOG1";

#[derive(Debug, Clone, PartialEq)]
pub struct DumpStep {
    pub scale: Scale,
    pub cond: Vec<f32>,
    pub uncond: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitDump {
    pub vocab: VocabSpec,
    pub steps: Vec<DumpStep>,
}

impl LogitDump {
    /// Record every step of `oracle` for `condition`, with an empty history.
    pub fn from_oracle(oracle: &dyn ModelOracle, condition: u32) -> Result<Self> {
        let steps = (0..oracle.scales().len())
            .map(|k| {
                let cond = oracle.next_logits(k, &[], Some(condition))?;
                let uncond = oracle.next_logits(k, &[], None)?;
                Ok(DumpStep {
                    scale: cond.scale(),
                    cond: cond.values().iter().map(|&x| x as f32).collect(),
                    uncond: uncond.values().iter().map(|&x| x as f32).collect(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            vocab: oracle.vocab(),
            steps,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let v = self.vocab.size();
        let as_u32 = |x: usize, what: &str| {
            u32::try_from(x).map_err(|_| Error::InvalidDims(format!("{what} {x} does not fit in u32")))
        };
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&as_u32(v, "vocabulary size")?.to_le_bytes());
        out.extend_from_slice(&as_u32(self.steps.len(), "step count")?.to_le_bytes());
        for (k, step) in self.steps.iter().enumerate() {
            let len = step.scale.area() * v;
            if step.cond.len() != len || step.uncond.len() != len {
                return Err(Error::ShapeMismatch {
                    tensor: "dump step",
                    expected: format!("{len} values per tensor at step {k}"),
                    actual: format!("{} / {}", step.cond.len(), step.uncond.len()),
                });
            }
            out.extend_from_slice(&as_u32(step.scale.h, "height")?.to_le_bytes());
            out.extend_from_slice(&as_u32(step.scale.w, "width")?.to_le_bytes());
            for x in step.cond.iter().chain(&step.uncond) {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut cursor = Cursor { bytes, offset: 0 };
        let magic = cursor.take(8, "magic", 8)?;
        if magic != MAGIC {
            return Err(FormatError::BadMagic {
                expected: String::from_utf8_lossy(MAGIC).into_owned(),
                found: String::from_utf8_lossy(magic).into_owned(),
            });
        }
        let vocab_offset = cursor.offset;
        let vocab_size = cursor.u32("vocabulary size", 16)? as usize;
        let vocab = VocabSpec::new(vocab_size).map_err(|_| FormatError::InvalidHeader {
            offset: vocab_offset,
            reason: format!("vocabulary size {vocab_size} is below 2"),
        })?;
        let count_offset = cursor.offset;
        let count = cursor.u32("step count", 16)? as usize;
        if count == 0 {
            return Err(FormatError::InvalidHeader {
                offset: count_offset,
                reason: "dump holds no steps".into(),
            });
        }
        // lower bound on the total length, refined as step headers are read
        let mut expected_total = 16usize.saturating_add(count.saturating_mul(8));
        let mut steps = Vec::with_capacity(count.min(1024));
        for k in 0..count {
            let header_offset = cursor.offset;
            let h = cursor.u32(&format!("step {k} header"), expected_total)? as usize;
            let w = cursor.u32(&format!("step {k} header"), expected_total)? as usize;
            if h == 0 || w == 0 {
                return Err(FormatError::InvalidHeader {
                    offset: header_offset,
                    reason: format!("step {k} has degenerate scale {h}x{w}"),
                });
            }
            let payload = h
                .checked_mul(w)
                .and_then(|n| n.checked_mul(vocab_size))
                .and_then(|n| n.checked_mul(8))
                .ok_or_else(|| FormatError::InvalidHeader {
                    offset: header_offset,
                    reason: format!("step {k} payload size overflows"),
                })?;
            expected_total = expected_total.saturating_add(payload);
            let per_tensor = h * w * vocab_size;
            let cond = cursor.f32s(per_tensor, &format!("step {k} conditional logits"), expected_total)?;
            let uncond = cursor.f32s(per_tensor, &format!("step {k} unconditional logits"), expected_total)?;
            steps.push(DumpStep {
                scale: Scale::new(h, w),
                cond,
                uncond,
            });
        }
        if cursor.offset != bytes.len() {
            return Err(FormatError::TrailingBytes {
                offset: cursor.offset,
                count: bytes.len() - cursor.offset,
            });
        }
        Ok(Self { vocab, steps })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str, expected_total: usize) -> Result<&'a [u8], FormatError> {
        let end = self.offset.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let slice = &self.bytes[self.offset..end];
                self.offset = end;
                Ok(slice)
            }
            None => Err(FormatError::Truncated {
                offset: self.offset,
                what: what.to_string(),
                expected: expected_total.max(self.offset.saturating_add(n)),
                actual: self.bytes.len(),
            }),
        }
    }

    fn u32(&mut self, what: &str, expected_total: usize) -> Result<u32, FormatError> {
        let b = self.take(4, what, expected_total)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn f32s(&mut self, n: usize, what: &str, expected_total: usize) -> Result<Vec<f32>, FormatError> {
        let start = self.offset;
        let raw = self.take(n * 4, what, expected_total)?;
        raw.chunks_exact(4)
            .enumerate()
            .map(|(i, b)| {
                let x = f32::from_le_bytes(b.try_into().expect("4 bytes"));
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(FormatError::NonFinite { offset: start + 4 * i })
                }
            })
            .collect()
    }
}

pub fn write_dump(path: impl AsRef<Path>, dump: &LogitDump) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, dump.to_bytes()?).map_err(|e| Error::io(path, e))
}

pub fn read_dump(path: impl AsRef<Path>) -> Result<LogitDump> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(LogitDump::from_bytes(&bytes)?)
}
