//! Command-line entry point wiring data preparation, training,
//! evaluation, and comparison into reproducible runs.
//!
//! ```text
//! kanboost <prepare|synth|train|eval|compare>
//!          [--profile paper|synth-small] [--config <path>]
//!          [--seed <int>] [--out <dir>] [--model mlp|kan|hybrid]
//! ```
//!
//! Exit codes: 0 success, 2 configuration/usage, 3 data ingestion,
//! 4 numeric/training, 5 artifact I/O.

mod commands;
mod config;

pub use commands::{cmd_compare, cmd_eval, cmd_prepare, cmd_synth, cmd_train, ModelChoice};
pub use config::{
    ConfigError, DataSource, EvalPartition, Profile, RunConfig, PAPER_PROFILE, SYNTH_SMALL_PROFILE,
};

use crate::boost::BoostError;
use crate::data::DataError;
use crate::io::FormatError;
use crate::kan::KanError;
use crate::pipeline::{MetricsError, PipelineError};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Data(#[from] DataError),

    #[error(transparent)]
    Kan(#[from] KanError),

    #[error(transparent)]
    Boost(#[from] BoostError),

    #[error(transparent)]
    Metrics(#[from] MetricsError),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Kan(e) => CliError::Kan(e),
            PipelineError::Boost(e) => CliError::Boost(e),
            PipelineError::Data(e) => CliError::Data(e),
            PipelineError::Metrics(e) => CliError::Metrics(e),
        }
    }
}

impl CliError {
    pub(crate) fn read(path: &Path, source: std::io::Error) -> Self {
        Self::Read {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn write(path: &Path, source: std::io::Error) -> Self {
        Self::Write {
            path: path.display().to_string(),
            source,
        }
    }

    /// Distinct exit codes per failure family.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Kan(_) | CliError::Boost(_) | CliError::Metrics(_) | CliError::Format(_) => 4,
            CliError::Read { .. } | CliError::Write { .. } => 5,
        }
    }
}

const USAGE: &str = "usage: kanboost <command> [options]

commands:
  prepare   build the experimental dataset (device CSVs or synthetic)
  synth     generate a synthetic dataset
  train     train one model on the prepared dataset
  eval      evaluate a trained model, writing report.json + confusion.csv
  compare   train and evaluate mlp, kan, and hybrid side by side

options:
  --profile <paper|synth-small>   shipped defaults (default: paper)
  --config <path>                 key-value config overlaying the profile
  --seed <int>                    override every configured seed
  --out <dir>                     output directory (required)
  --model <mlp|kan|hybrid>        model for `train` (default: hybrid)
";

struct ParsedArgs {
    command: String,
    profile: Profile,
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    model: ModelChoice,
}

fn parse_args(args: &[String]) -> Result<ParsedArgs, CliError> {
    let mut it = args.iter();
    let command = it
        .next()
        .ok_or_else(|| CliError::Usage(USAGE.into()))?
        .clone();
    let mut parsed = ParsedArgs {
        command,
        profile: Profile::Paper,
        config: None,
        seed: None,
        out: None,
        model: ModelChoice::Hybrid,
    };
    while let Some(flag) = it.next() {
        let mut value = || {
            it.next()
                .cloned()
                .ok_or_else(|| CliError::Usage(format!("{flag} needs a value")))
        };
        match flag.as_str() {
            "--profile" => parsed.profile = Profile::parse(&value()?)?,
            "--config" => parsed.config = Some(PathBuf::from(value()?)),
            "--seed" => {
                let v = value()?;
                parsed.seed = Some(v.parse().map_err(|_| {
                    CliError::Usage(format!("--seed expects an integer, got {v:?}"))
                })?);
            }
            "--out" => parsed.out = Some(PathBuf::from(value()?)),
            "--model" => parsed.model = ModelChoice::parse(&value()?)?,
            "--help" | "-h" => return Err(CliError::Usage(USAGE.into())),
            other => {
                return Err(CliError::Usage(format!(
                    "unknown flag {other:?}\n\n{USAGE}"
                )))
            }
        }
    }
    Ok(parsed)
}

/// Parses arguments, runs the selected command, and returns its result.
pub fn run(args: &[String]) -> Result<(), CliError> {
    let parsed = parse_args(args)?;
    let command = parsed.command.as_str();
    if matches!(command, "--help" | "-h" | "help") {
        return Err(CliError::Usage(USAGE.into()));
    }
    if !matches!(command, "prepare" | "synth" | "train" | "eval" | "compare") {
        return Err(CliError::Usage(format!(
            "unknown command {command:?}\n\n{USAGE}"
        )));
    }
    let cfg = RunConfig::resolve(parsed.profile, parsed.config.as_deref(), parsed.seed)?;
    let out = parsed
        .out
        .as_deref()
        .ok_or_else(|| CliError::Usage("--out <dir> is required".into()))?;
    match command {
        "prepare" => cmd_prepare(cfg, out),
        "synth" => cmd_synth(cfg, out),
        "train" => cmd_train(cfg, out, parsed.model),
        "eval" => cmd_eval(cfg, out),
        "compare" => cmd_compare(cfg, out),
        _ => unreachable!("command validated above"),
    }
}

/// `run` with process semantics: prints errors to stderr and maps them to
/// exit codes.
pub fn main_with_args(args: &[String]) -> i32 {
    match run(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(parts: &[&str]) -> Vec<String> {
        parts.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn rejects_unknown_commands_and_flags() {
        let e = run(&strings(&["frobnicate", "--out", "x"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run(&strings(&["synth", "--frob"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run(&strings(&["synth"])).unwrap_err();
        assert_eq!(e.exit_code(), 2); // missing --out
    }

    #[test]
    fn seed_flag_must_be_numeric() {
        let e = run(&strings(&["synth", "--seed", "lots", "--out", "x"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn synth_writes_dataset_manifest_and_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let cfg_path = dir.path().join("tiny.conf");
        std::fs::write(
            &cfg_path,
            "[synth]\nclasses = 3\nwidth = 8\nbenign_total = 30\nper_attack = 10\nseed = 5\n",
        )
        .unwrap();
        run(&strings(&[
            "synth",
            "--profile",
            "synth-small",
            "--config",
            cfg_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]))
        .unwrap();

        assert!(out.join("dataset.csv").is_file());
        assert!(out.join("config.snapshot").is_file());
        let manifest = std::fs::read_to_string(out.join("manifest.txt")).unwrap();
        assert!(manifest.contains("command = synth"));
        assert!(manifest.contains("rows = 50"));
        assert!(manifest.contains("class_count_00_benign = 30"));
        assert!(manifest.contains("class_count_01_attack_01 = 10"));
        assert!(manifest.contains("dataset_fnv1a64 = "));

        // The snapshot chains: it must point at the dataset.
        let snap = std::fs::read_to_string(out.join("config.snapshot")).unwrap();
        assert!(snap.contains("dataset = "));
    }
}
