//! `swarg`: sampling, comparison and analysis of guidance schemes from the
//! command line.

pub mod config;
pub mod report;
pub mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use swar_guidance::io::dump::{write_dump, LogitDump};
use swar_guidance::io::pnm::write_mask;
use swar_guidance::{Error, SceneOracle};

use config::{ExperimentArgs, ExperimentConfig, OracleSpec, SceneParams};
use run::RunOutcome;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("{0}")]
    AllSkipped(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Format(_) => 3,
            CliError::AllSkipped(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Format(_) | Error::Io { .. } | Error::Serde(_) => CliError::Format(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "swarg", version, about = "Guidance experiments for scale-wise autoregressive samplers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample one run per seed and write records and heatmaps.
    Sample(ExperimentArgs),
    /// Compare two experiments seed by seed.
    Compare(CompareArgs),
    /// Score a logit dump under a guidance scheme.
    Analyze(ExperimentArgs),
    /// Write the scene oracle's logits for one condition as a dump.
    Dump(DumpArgs),
}

#[derive(Debug, clap::Args)]
pub struct CompareArgs {
    /// Experiment A: a `sample` output directory or a key=value config file.
    pub a: PathBuf,
    /// Experiment B: a `sample` output directory or a key=value config file.
    pub b: PathBuf,
    /// Write the freshly sampled runs of config inputs under DIR/a and DIR/b.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for config inputs. [default: available parallelism]
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, clap::Args)]
pub struct DumpArgs {
    /// Dump file to write.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Condition id.
    #[arg(long, default_value_t = 0)]
    pub class: u32,
    /// Seed of the scene oracle.
    #[arg(long, default_value_t = 0)]
    pub scene_seed: u64,
    /// Scene oracle class contrast. [default: 1]
    #[arg(long)]
    pub contrast: Option<f64>,
    /// Scene oracle model-error level. [default: 0.2]
    #[arg(long)]
    pub noise: Option<f64>,
    /// Scene oracle blur weight. [default: 1]
    #[arg(long)]
    pub smoothness: Option<f64>,
    /// Also write the class's planted mask as PGM.
    #[arg(long, value_name = "FILE")]
    pub mask_out: Option<PathBuf>,
}

fn all_skipped(outcomes: &[RunOutcome]) -> Result<(), CliError> {
    if !outcomes.is_empty() && outcomes.iter().all(RunOutcome::skipped) {
        return Err(CliError::AllSkipped(format!(
            "all {} runs were skipped for degenerate input",
            outcomes.len()
        )));
    }
    Ok(())
}

fn cmd_sample(args: &ExperimentArgs) -> Result<(), CliError> {
    let cfg = args.resolve()?;
    let outcomes = run::execute(&cfg, Some(&cfg.out))?;
    print!("{}", report::sample_summary(&outcomes));
    println!("wrote {} runs to {}", outcomes.len(), cfg.out.display());
    all_skipped(&outcomes)
}

fn cmd_analyze(args: &ExperimentArgs) -> Result<(), CliError> {
    let cfg = args.resolve()?;
    if !matches!(cfg.oracle, OracleSpec::Dump(_)) {
        return Err(CliError::Config("analyze needs --dump FILE".into()));
    }
    let outcomes = run::execute(&cfg, Some(&cfg.out))?;
    for o in &outcomes {
        print!("{}", report::step_table(o));
    }
    if outcomes.len() > 1 {
        print!("{}", report::sample_summary(&outcomes));
    }
    println!("heatmaps in {}", cfg.out.display());
    all_skipped(&outcomes)
}

fn compare_side(path: &Path, out: Option<PathBuf>, jobs: Option<usize>) -> Result<(String, Vec<RunOutcome>), CliError> {
    if path.is_dir() {
        let outcomes = run::load_outcomes(path)?;
        let label = format!("{} ({})", outcomes[0].record.scheme.kind, path.display());
        return Ok((label, outcomes));
    }
    let map = config::load_config_file(path)?;
    let mut cfg = ExperimentConfig::from_map(&map)?;
    if jobs.is_some() {
        cfg.jobs = jobs;
    }
    let outcomes = run::execute(&cfg, out.as_deref())?;
    let label = format!("{} w={} ({})", cfg.scheme.kind, cfg.weight, path.display());
    Ok((label, outcomes))
}

fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let (label_a, a) = compare_side(&args.a, args.out.as_ref().map(|o| o.join("a")), args.jobs)?;
    let (label_b, b) = compare_side(&args.b, args.out.as_ref().map(|o| o.join("b")), args.jobs)?;
    print!("{}", report::compare_report(&label_a, &a, &label_b, &b)?);
    Ok(())
}

fn cmd_dump(args: &DumpArgs) -> Result<(), CliError> {
    let params = SceneParams {
        seed: Some(args.scene_seed),
        contrast: args.contrast,
        noise: args.noise,
        smoothness: args.smoothness,
    };
    let oracle = SceneOracle::new(run::scene_config(&params, args.scene_seed)?)?;
    let dump = LogitDump::from_oracle(&oracle, args.class)?;
    write_dump(&args.out, &dump)?;
    println!("wrote {} steps to {}", dump.steps.len(), args.out.display());
    if let Some(path) = &args.mask_out {
        write_mask(path, &oracle.mask(args.class)?)?;
        println!("wrote mask to {}", path.display());
    }
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Dump(args) => cmd_dump(args),
    }
}

/// Parse `std::env::args`, run, and map failures onto exit codes.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("swarg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
