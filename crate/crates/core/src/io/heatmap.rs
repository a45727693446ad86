//! Per-step guidance heatmaps: CSV magnitudes, normalised 8-bit PGM, and an
//! annotations table with the per-step scores.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::pnm::encode_pgm;
use crate::error::{Error, Result};
use crate::record::RunRecord;

/// Magnitudes with six significant digits, one line per grid row.
pub fn magnitudes_csv(magnitudes: &[f64], width: usize) -> String {
    let mut out = String::new();
    for row in magnitudes.chunks(width) {
        let line: Vec<String> = row.iter().map(|m| format!("{m:.5e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Map `[min, max]` linearly onto `[0, 255]`; a constant map becomes mid-grey 128.
pub fn normalize_to_u8(magnitudes: &[f64]) -> Vec<u8> {
    let min = magnitudes.iter().copied().fold(f64::INFINITY, f64::min);
    let max = magnitudes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return vec![128; magnitudes.len()];
    }
    magnitudes
        .iter()
        .map(|&m| ((m - min) / (max - min) * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect()
}

fn score(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// Write `step_<k>.csv` and `step_<k>.pgm` for every step `k >= 1`, plus
/// `annotations.csv`. Returns the written paths in order.
pub fn export_heatmaps(run: &RunRecord, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    if run.steps().len() < 2 {
        return Err(Error::InvalidDims("heatmaps need at least one step after the first".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: String, bytes: &[u8]| -> Result<PathBuf> {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    };

    let mut written = Vec::new();
    let mut annotations = String::from("step,height,width,weight,evenness,divergence\n");
    for (k, step) in run.steps().iter().enumerate().skip(1) {
        let scale = step.field.scale();
        let magnitudes = step.field.magnitudes();
        written.push(write(format!("step_{k}.csv"), magnitudes_csv(&magnitudes, scale.w).as_bytes())?);
        written.push(write(
            format!("step_{k}.pgm"),
            &encode_pgm(scale.w, scale.h, &normalize_to_u8(&magnitudes)),
        )?);
        let _ = writeln!(
            annotations,
            "{k},{},{},{},{},{}",
            scale.h,
            scale.w,
            scale.area(),
            score(step.evenness),
            score(step.divergence)
        );
    }
    let _ = writeln!(
        annotations,
        "aggregate,,,,{},{}",
        score(run.aggregate.evenness),
        score(run.aggregate.divergence)
    );
    written.push(write("annotations.csv".into(), annotations.as_bytes())?);
    Ok(written)
}

/// Parse a magnitudes CSV back into row-major values.
pub fn parse_magnitudes_csv(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .filter(|l| !l.is_empty())
        .flat_map(|l| l.split(','))
        .map(|cell| {
            cell.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidDims(format!("bad CSV cell `{cell}`: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_map_is_mid_grey() {
        assert_eq!(normalize_to_u8(&[0.3; 4]), vec![128; 4]);
    }

    #[test]
    fn normalization_endpoints() {
        assert_eq!(normalize_to_u8(&[1.0, 2.0, 3.0]), vec![0, 128, 255]);
    }

    #[test]
    fn csv_keeps_six_significant_digits() {
        let vals = [1.234_567_89, 0.000_123_456_7, 98_765.432_1, 0.0];
        let csv = magnitudes_csv(&vals, 2);
        assert_eq!(csv.lines().count(), 2);
        let back = parse_magnitudes_csv(&csv).unwrap();
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).abs() <= 5e-6 * a.abs(), "{a} vs {b}");
        }
        assert_eq!(format!("{:.5e}", back[0]), format!("{:.5e}", vals[0]));
    }
}
