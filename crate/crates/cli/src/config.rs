//! Experiment configuration: command-line flags merged over an optional
//! `key=value` file. Keys are the long flag names without the dashes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::builder::PossibleValuesParser;
use clap::Args;
use swar_guidance::{GuidanceScheme, ScheduleKind, SchemeKind, WindowRule};

use crate::CliError;

const KEYS: &[&str] = &[
    "oracle",
    "dump",
    "mask",
    "scheme",
    "w",
    "w2",
    "schedule",
    "temperature",
    "top-k",
    "seeds",
    "out",
    "jobs",
    "class",
    "window",
    "scene-seed",
    "contrast",
    "noise",
    "smoothness",
];

#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// File of `key=value` lines (keys are flag names); flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Logit source. [default: scene, or dump when --dump is given]
    #[arg(long, value_parser = PossibleValuesParser::new(["scene", "dump"]))]
    pub oracle: Option<String>,

    /// Logit dump to replay (`--oracle dump`).
    #[arg(long, value_name = "FILE")]
    pub dump: Option<PathBuf>,

    /// Foreground mask (PGM P5 or PBM P1) at or above the final resolution.
    /// The scene oracle falls back to its planted class region.
    #[arg(long, value_name = "FILE")]
    pub mask: Option<PathBuf>,

    /// Guidance scheme. [default: cfg]
    #[arg(long, value_parser = PossibleValuesParser::new(["none", "cfg", "igg", "igg-window", "mixed"]))]
    pub scheme: Option<String>,

    /// Guidance weight: lambda at the last step for `ratio`, gamma for `fixed`. [default: 1]
    #[arg(long)]
    pub w: Option<String>,

    /// Attention-weighted guidance weight of the mixed scheme.
    #[arg(long)]
    pub w2: Option<String>,

    /// Guidance schedule over the scales. [default: ratio]
    #[arg(long, value_parser = PossibleValuesParser::new(["ratio", "fixed"]))]
    pub schedule: Option<String>,

    /// Softmax temperature of the token sampler. [default: 1]
    #[arg(long)]
    pub temperature: Option<String>,

    /// Sample only among the k most likely tokens.
    #[arg(long, value_name = "K")]
    pub top_k: Option<String>,

    /// Seed count `N` (seeds 0..N) or a comma-separated list. [default: 1]
    #[arg(long)]
    pub seeds: Option<String>,

    /// Output directory. [default: swarg-out]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Worker threads. [default: available parallelism]
    #[arg(long)]
    pub jobs: Option<String>,

    /// Condition id. [default: seed mod class count for the scene oracle, 0 for dumps]
    #[arg(long)]
    pub class: Option<String>,

    /// Attention window side for `igg-window`. [default: sqrt(h*w) per scale]
    #[arg(long)]
    pub window: Option<String>,

    /// Seed of the scene oracle's texture and noise. [default: the run seed]
    #[arg(long)]
    pub scene_seed: Option<String>,

    /// Scene oracle class contrast. [default: 1]
    #[arg(long)]
    pub contrast: Option<String>,

    /// Scene oracle model-error level, relative to the contrast. [default: 0.2]
    #[arg(long)]
    pub noise: Option<String>,

    /// Scene oracle blur weight of neighbouring cells. [default: 1]
    #[arg(long)]
    pub smoothness: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneParams {
    pub seed: Option<u64>,
    pub contrast: Option<f64>,
    pub noise: Option<f64>,
    pub smoothness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleSpec {
    Scene(SceneParams),
    Dump(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub oracle: OracleSpec,
    pub mask: Option<PathBuf>,
    pub scheme: GuidanceScheme,
    pub weight: f64,
    pub secondary_weight: Option<f64>,
    pub schedule: ScheduleKind,
    pub temperature: f64,
    pub top_k: Option<usize>,
    pub seeds: Vec<u64>,
    pub class: Option<u32>,
    pub out: PathBuf,
    pub jobs: Option<usize>,
}

/// Parse `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_file(text: &str, origin: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("{}:{}: expected key=value, got `{line}`", origin.display(), n + 1))
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!(
                "{}:{}: unknown key `{key}`",
                origin.display(),
                n + 1
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_file(&text, path)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("invalid --{key} `{value}`: {e}")))
}

/// `N` means seeds `0..N`; anything with a comma is an explicit list.
pub fn parse_seeds(value: &str) -> Result<Vec<u64>, CliError> {
    let seeds: Vec<u64> = if value.contains(',') {
        value
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse("seeds", s.trim()))
            .collect::<Result<_, _>>()?
    } else {
        let n: u64 = parse("seeds", value.trim())?;
        (0..n).collect()
    };
    if seeds.is_empty() {
        return Err(CliError::Config("--seeds selects no seeds".into()));
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(CliError::Config(format!("seed {} is listed twice", w[0])));
    }
    Ok(seeds)
}

impl ExperimentArgs {
    fn flag_values(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.to_string_lossy().into_owned());
        [
            ("oracle", self.oracle.clone()),
            ("dump", path(&self.dump)),
            ("mask", path(&self.mask)),
            ("scheme", self.scheme.clone()),
            ("w", self.w.clone()),
            ("w2", self.w2.clone()),
            ("schedule", self.schedule.clone()),
            ("temperature", self.temperature.clone()),
            ("top-k", self.top_k.clone()),
            ("seeds", self.seeds.clone()),
            ("out", path(&self.out)),
            ("jobs", self.jobs.clone()),
            ("class", self.class.clone()),
            ("window", self.window.clone()),
            ("scene-seed", self.scene_seed.clone()),
            ("contrast", self.contrast.clone()),
            ("noise", self.noise.clone()),
            ("smoothness", self.smoothness.clone()),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }

    /// Merge the config file (if any) with the flags, flags winning.
    pub fn merged(&self) -> Result<BTreeMap<String, String>, CliError> {
        let mut map = match &self.config {
            Some(path) => load_config_file(path)?,
            None => BTreeMap::new(),
        };
        for (key, value) in self.flag_values() {
            map.insert(key.to_string(), value);
        }
        Ok(map)
    }

    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::from_map(&self.merged()?)
    }
}

impl ExperimentConfig {
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let get = |k: &str| map.get(k).map(String::as_str);
        let opt = |k: &str| -> Result<Option<f64>, CliError> { get(k).map(|v| parse(k, v)).transpose() };

        let oracle_kind = get("oracle").unwrap_or(if map.contains_key("dump") { "dump" } else { "scene" });
        let scene_keys = ["scene-seed", "contrast", "noise", "smoothness"];
        let oracle = match oracle_kind {
            "scene" => {
                if map.contains_key("dump") {
                    return Err(CliError::Config("--dump requires --oracle dump".into()));
                }
                OracleSpec::Scene(SceneParams {
                    seed: get("scene-seed").map(|v| parse("scene-seed", v)).transpose()?,
                    contrast: opt("contrast")?,
                    noise: opt("noise")?,
                    smoothness: opt("smoothness")?,
                })
            }
            "dump" => {
                if let Some(k) = scene_keys.iter().find(|k| map.contains_key(**k)) {
                    return Err(CliError::Config(format!("--{k} only applies to the scene oracle")));
                }
                OracleSpec::Dump(PathBuf::from(
                    get("dump").ok_or_else(|| CliError::Config("--oracle dump requires --dump FILE".into()))?,
                ))
            }
            other => return Err(CliError::Config(format!("unknown oracle `{other}` (expected scene or dump)"))),
        };

        let kind: SchemeKind = parse("scheme", get("scheme").unwrap_or("cfg"))?;
        let scheme = match (kind, get("window")) {
            (SchemeKind::IggWindow, Some(w)) => GuidanceScheme::windowed(WindowRule::Fixed(parse("window", w)?))
                .map_err(|e| CliError::Config(e.to_string()))?,
            (SchemeKind::IggWindow, None) => GuidanceScheme::windowed(WindowRule::GeometricMean)
                .map_err(|e| CliError::Config(e.to_string()))?,
            (_, Some(_)) => return Err(CliError::Config("--window only applies to --scheme igg-window".into())),
            (kind, None) => GuidanceScheme::new(kind),
        };
        let secondary_weight = opt("w2")?;
        match (kind, secondary_weight) {
            (SchemeKind::Mixed, None) => return Err(CliError::Config("--scheme mixed requires --w2".into())),
            (SchemeKind::Mixed, Some(_)) | (_, None) => {}
            (_, Some(_)) => return Err(CliError::Config("--w2 only applies to --scheme mixed".into())),
        }

        let top_k = get("top-k").map(|v| parse("top-k", v)).transpose()?;
        if top_k == Some(0) {
            return Err(CliError::Config("--top-k must be at least 1".into()));
        }
        let jobs = get("jobs").map(|v| parse("jobs", v)).transpose()?;
        if jobs == Some(0) {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }

        Ok(Self {
            oracle,
            mask: get("mask").map(PathBuf::from),
            scheme,
            weight: opt("w")?.unwrap_or(1.0),
            secondary_weight,
            schedule: parse("schedule", get("schedule").unwrap_or("ratio"))?,
            temperature: opt("temperature")?.unwrap_or(1.0),
            top_k,
            seeds: parse_seeds(get("seeds").unwrap_or("1"))?,
            class: get("class").map(|v| parse("class", v)).transpose()?,
            out: PathBuf::from(get("out").unwrap_or("swarg-out")),
            jobs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::from_map(&BTreeMap::new()).unwrap();
        assert_eq!(cfg.oracle, OracleSpec::Scene(SceneParams::default()));
        assert_eq!(cfg.scheme.kind, SchemeKind::Cfg);
        assert_eq!(cfg.seeds, vec![0]);
        assert_eq!(cfg.weight, 1.0);
        assert_eq!(cfg.temperature, 1.0);
        assert_eq!(cfg.top_k, None);
    }

    #[test]
    fn seeds_count_and_list() {
        assert_eq!(parse_seeds("3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("7,2,9").unwrap(), vec![7, 2, 9]);
        assert_eq!(parse_seeds("5,").unwrap(), vec![5]);
        assert!(parse_seeds("0").is_err());
        assert!(parse_seeds("1,1").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn file_parsing() {
        let text = "# comment\nscheme = igg\n\n--w=1.85\ntop_k=5\n";
        let m = parse_config_file(text, Path::new("a.conf")).unwrap();
        assert_eq!(m, map(&[("scheme", "igg"), ("w", "1.85"), ("top-k", "5")]));
        assert!(parse_config_file("bogus=1", Path::new("a.conf")).is_err());
        assert!(parse_config_file("scheme igg", Path::new("a.conf")).is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.conf");
        std::fs::write(&path, "scheme=igg\nw=3\nseeds=4\n").unwrap();
        let args = ExperimentArgs {
            config: Some(path),
            w: Some("1.85".into()),
            ..Default::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.scheme.kind, SchemeKind::Igg);
        assert_eq!(cfg.weight, 1.85);
        assert_eq!(cfg.seeds.len(), 4);
    }

    #[test]
    fn inconsistent_settings_are_rejected() {
        for pairs in [
            &[("scheme", "mixed")][..],
            &[("scheme", "cfg"), ("w2", "1")],
            &[("scheme", "igg"), ("window", "3")],
            &[("scheme", "igg-window"), ("window", "0")],
            &[("oracle", "dump")],
            &[("oracle", "scene"), ("dump", "x.swar")],
            &[("dump", "x.swar"), ("noise", "0.1")],
            &[("scheme", "bogus")],
            &[("schedule", "cosine")],
            &[("top-k", "0")],
            &[("jobs", "0")],
            &[("w", "abc")],
        ] {
            assert!(ExperimentConfig::from_map(&map(pairs)).is_err(), "{pairs:?}");
        }
    }

    #[test]
    fn dump_is_implied_by_path() {
        let cfg = ExperimentConfig::from_map(&map(&[("dump", "run.swar")])).unwrap();
        assert_eq!(cfg.oracle, OracleSpec::Dump("run.swar".into()));
    }
}
