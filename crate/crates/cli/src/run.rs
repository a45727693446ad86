//! Executing an experiment: one sampling run per seed on a worker pool.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use swar_guidance::io::heatmap::export_heatmaps;
use swar_guidance::io::pnm::read_mask;
use swar_guidance::io::write_record;
use swar_guidance::metrics::divergence_steps;
use swar_guidance::sim::ReplayOracle;
use swar_guidance::{
    run_sampling, Error, ModelOracle, RunRecord, SamplerConfig, Scale, ScaleSchedule, SceneOracle, SceneOracleConfig,
    SegMask,
};

use crate::config::{ExperimentConfig, OracleSpec, SceneParams};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub seed: u64,
    pub record: RunRecord,
    /// Why the run has no divergence score, when divergence was requested.
    pub divergence_skipped: Option<String>,
}

impl RunOutcome {
    /// A run is skipped when any metric it was asked for could not be scored.
    pub fn skipped(&self) -> bool {
        self.divergence_skipped.is_some() || self.record.aggregate.evenness.is_none()
    }
}

/// Everything shared read-only between the workers.
struct Prepared {
    replay: Option<Arc<ReplayOracle>>,
    mask: Option<SegMask>,
}

pub fn scene_config(params: &SceneParams, run_seed: u64) -> Result<SceneOracleConfig, CliError> {
    let mut cfg = SceneOracleConfig::desk(params.seed.unwrap_or(run_seed));
    if let Some(c) = params.contrast {
        cfg.contrast = c;
    }
    if let Some(n) = params.noise {
        cfg.noise = n;
    }
    if let Some(s) = params.smoothness {
        cfg.smoothness = s;
    }
    cfg.validate().map_err(CliError::from)?;
    Ok(cfg)
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, CliError> {
    let replay = match &cfg.oracle {
        OracleSpec::Dump(path) => Some(Arc::new(swar_guidance::sim::replay_oracle(path)?)),
        OracleSpec::Scene(_) => None,
    };
    let mask = cfg.mask.as_deref().map(|p| read_mask(p, None)).transpose()?;
    if let (Some(mask), Some(path)) = (&mask, &cfg.mask) {
        let last = match &replay {
            Some(r) => *r.scales().last().expect("dumps hold at least one step"),
            None => Scale::square(*ScaleSchedule::default_sides().last().expect("non-empty")),
        };
        if mask.height() < last.h || mask.width() < last.w {
            return Err(CliError::Format(format!(
                "{}: mask is {}, smaller than the final scale {last}",
                path.display(),
                mask.scale()
            )));
        }
    }
    Ok(Prepared { replay, mask })
}

fn run_one(cfg: &ExperimentConfig, prepared: &Prepared, seed: u64) -> Result<RunOutcome, CliError> {
    let scene;
    let (oracle, condition, mask): (&dyn ModelOracle, u32, Option<SegMask>) = match (&cfg.oracle, &prepared.replay) {
        (OracleSpec::Scene(params), _) => {
            let scene_cfg = scene_config(params, seed)?;
            let classes = scene_cfg.classes.len() as u32;
            let condition = cfg.class.unwrap_or((seed % classes as u64) as u32);
            scene = SceneOracle::new(scene_cfg)?;
            let mask = match &prepared.mask {
                Some(m) => m.clone(),
                None => scene.mask(condition)?,
            };
            (&scene, condition, Some(mask))
        }
        (OracleSpec::Dump(_), Some(replay)) => (replay.as_ref(), cfg.class.unwrap_or(0), prepared.mask.clone()),
        (OracleSpec::Dump(_), None) => unreachable!("dump oracle is loaded up front"),
    };

    let schedule = ScaleSchedule::new(oracle.scales().to_vec(), cfg.weight, cfg.secondary_weight, cfg.schedule)?;
    let sampler = SamplerConfig {
        scheme: cfg.scheme,
        schedule,
        temperature: cfg.temperature,
        top_k: cfg.top_k,
        seed,
    };
    let mut record = run_sampling(oracle, &sampler, condition)?;

    let divergence_skipped = match mask {
        None => None,
        Some(mask) => match divergence_steps(&record, &mask, seed) {
            Ok(per_step) if per_step.iter().all(Option::is_none) => {
                Some("no scored step has both foreground and background cells".to_string())
            }
            Ok(per_step) => {
                record.set_divergences(&per_step)?;
                None
            }
            Err(Error::EmptyBackground) => Some("mask is all foreground".to_string()),
            Err(Error::EmptyForeground) => Some("mask is all background".to_string()),
            Err(Error::InvalidDims(reason)) => Some(reason),
            Err(e) => return Err(e.into()),
        },
    };
    Ok(RunOutcome {
        seed,
        record,
        divergence_skipped,
    })
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

/// Write `record.json` and the heatmaps of one run under `seed_<s>/`.
pub fn write_outcome(out: &Path, outcome: &RunOutcome) -> Result<(), CliError> {
    let dir = seed_dir(out, outcome.seed);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_record(dir.join("record.json"), &outcome.record)?;
    if outcome.record.steps().len() >= 2 {
        export_heatmaps(&outcome.record, &dir)?;
    }
    Ok(())
}

/// Sample every seed; with `out` set, each worker writes its own seed directory.
/// Results come back in seed-list order regardless of scheduling.
pub fn execute(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Vec<RunOutcome>, CliError> {
    let prepared = prepare(cfg)?;
    if cfg.mask.is_none() && matches!(cfg.oracle, OracleSpec::Dump(_)) {
        eprintln!("warning: no --mask given; reporting evenness only");
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| {
                let outcome = run_one(cfg, &prepared, seed)?;
                if let Some(out) = out {
                    write_outcome(out, &outcome)?;
                }
                Ok(outcome)
            })
            .collect()
    })
}

/// Load every `seed_<s>/record.json` below `dir`, sorted by seed.
pub fn load_outcomes(dir: &Path) -> Result<Vec<RunOutcome>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut outcomes = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(seed) = name.to_str().and_then(|n| n.strip_prefix("seed_")).and_then(|s| s.parse().ok()) else {
            continue;
        };
        let record = swar_guidance::io::read_record(entry.path().join("record.json"))?;
        outcomes.push(RunOutcome {
            seed,
            divergence_skipped: record
                .aggregate
                .divergence
                .is_none()
                .then(|| "record has no divergence score".to_string()),
            record,
        });
    }
    if outcomes.is_empty() {
        return Err(CliError::Config(format!("{} holds no seed_<n>/record.json runs", dir.display())));
    }
    outcomes.sort_by_key(|o| o.seed);
    Ok(outcomes)
}
