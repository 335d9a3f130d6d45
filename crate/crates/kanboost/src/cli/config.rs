//! Flat key-value run configuration with sections per concern.
//!
//! Resolution order: the shipped full-scale profile supplies every
//! default, the selected profile overlays it, an explicit `--config`
//! file overlays both, and `--seed` finally replaces all seeds. Every
//! command writes its resolved configuration back into its output
//! directory as `config.snapshot`, which is itself a valid `--config`
//! input, so runs chain without repeating settings.

use crate::kan::{AdamParams, TrainConfig};
use crate::pipeline::{GbtSettings, ModelArch};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const PAPER_PROFILE: &str = include_str!("../../profiles/paper.profile");
pub const SYNTH_SMALL_PROFILE: &str = include_str!("../../profiles/synth-small.profile");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Unreadable {
        path: String,
        source: std::io::Error,
    },

    #[error("config line {line}: expected `key = value`, got {content:?}")]
    MalformedLine { line: usize, content: String },

    #[error("config line {line}: unknown section [{0}]", .section)]
    UnknownSection { line: usize, section: String },

    #[error("config line {line}: unknown key {key:?} in section [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },

    #[error("missing config key [{section}] {key}")]
    MissingKey { section: String, key: String },

    #[error("config key [{section}] {key}: cannot parse {value:?} as {ty}")]
    BadValue {
        section: String,
        key: String,
        value: String,
        ty: &'static str,
    },

    #[error("unknown profile {0:?} (expected `paper` or `synth-small`)")]
    UnknownProfile(String),

    #[error("{0}")]
    Invalid(String),
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    (
        "plan",
        &[
            "source",
            "data_dir",
            "benign_total",
            "per_attack_per_device",
            "devices",
            "seed",
        ],
    ),
    (
        "synth",
        &["classes", "width", "benign_total", "per_attack", "seed"],
    ),
    ("model", &["hidden", "spline_degree", "grid_intervals"]),
    (
        "train",
        &[
            "epochs",
            "batch_size",
            "learning_rate",
            "beta1",
            "beta2",
            "epsilon",
            "step_size",
            "gamma",
            "seed",
        ],
    ),
    (
        "gbt",
        &[
            "rounds",
            "learning_rate",
            "max_depth",
            "lambda",
            "gamma",
            "min_child_weight",
            "base_score",
        ],
    ),
    ("split", &["test_fraction", "seed"]),
    ("eval", &["partition"]),
    (
        "io",
        &["dataset", "model_kind", "model", "gbt_model", "stats"],
    ),
];

type Doc = BTreeMap<String, BTreeMap<String, String>>;

fn parse_ini(text: &str) -> Result<Doc, ConfigError> {
    let mut doc: Doc = BTreeMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if !KNOWN_KEYS.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::UnknownSection {
                    line: i + 1,
                    section: name,
                });
            }
            section = name;
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::MalformedLine {
                line: i + 1,
                content: line.to_string(),
            });
        };
        let key = key.trim().to_string();
        let known = KNOWN_KEYS
            .iter()
            .find(|(s, _)| *s == section)
            .map(|(_, keys)| keys.contains(&key.as_str()))
            .unwrap_or(false);
        if !known {
            return Err(ConfigError::UnknownKey {
                line: i + 1,
                section: section.clone(),
                key,
            });
        }
        doc.entry(section.clone())
            .or_default()
            .insert(key, value.trim().to_string());
    }
    Ok(doc)
}

fn overlay(base: &mut Doc, over: Doc) {
    for (section, keys) in over {
        let target = base.entry(section).or_default();
        for (k, v) in keys {
            target.insert(k, v);
        }
    }
}

struct DocView<'a>(&'a Doc);

impl<'a> DocView<'a> {
    fn get(&self, section: &str, key: &str) -> Result<&'a str, ConfigError> {
        self.0
            .get(section)
            .and_then(|s| s.get(key))
            .map(String::as_str)
            .ok_or_else(|| ConfigError::MissingKey {
                section: section.into(),
                key: key.into(),
            })
    }

    fn opt(&self, section: &str, key: &str) -> Option<&'a str> {
        self.0
            .get(section)
            .and_then(|s| s.get(key))
            .map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
        ty: &'static str,
    ) -> Result<T, ConfigError> {
        let value = self.get(section, key)?;
        value.parse().map_err(|_| ConfigError::BadValue {
            section: section.into(),
            key: key.into(),
            value: value.into(),
            ty,
        })
    }
}

/// The two shipped configuration profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Paper,
    SynthSmall,
}

impl Profile {
    pub fn parse(name: &str) -> Result<Self, ConfigError> {
        match name {
            "paper" => Ok(Self::Paper),
            "synth-small" => Ok(Self::SynthSmall),
            other => Err(ConfigError::UnknownProfile(other.into())),
        }
    }

    fn text(self) -> &'static str {
        match self {
            Self::Paper => PAPER_PROFILE,
            Self::SynthSmall => SYNTH_SMALL_PROFILE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    Nbaiot,
    Synth,
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Nbaiot => "nbaiot",
            Self::Synth => "synth",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanSection {
    pub source: DataSource,
    pub data_dir: PathBuf,
    pub benign_total: usize,
    pub per_attack_per_device: usize,
    pub devices: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSection {
    pub classes: usize,
    pub width: usize,
    pub benign_total: usize,
    pub per_attack: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step_size: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl TrainSection {
    pub fn to_train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            adam: AdamParams {
                beta1: self.beta1,
                beta2: self.beta2,
                epsilon: self.epsilon,
            },
            step_size: self.step_size,
            gamma: self.gamma,
            rng_seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSection {
    pub test_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalPartition {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IoSection {
    pub dataset: Option<PathBuf>,
    pub model_kind: Option<String>,
    pub model: Option<PathBuf>,
    pub gbt_model: Option<PathBuf>,
    pub stats: Option<PathBuf>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub plan: PlanSection,
    pub synth: SynthSection,
    pub arch: ModelArch,
    pub train: TrainSection,
    pub gbt: GbtSettings,
    pub split: SplitSection,
    pub eval_partition: EvalPartition,
    pub io: IoSection,
}

impl RunConfig {
    /// Resolves profile defaults, an optional config file, and an
    /// optional seed override into a typed configuration.
    pub fn resolve(
        profile: Profile,
        config_path: Option<&Path>,
        seed_override: Option<u64>,
    ) -> Result<Self, ConfigError> {
        let mut doc = parse_ini(PAPER_PROFILE)?;
        if profile != Profile::Paper {
            overlay(&mut doc, parse_ini(profile.text())?);
        }
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
                path: path.display().to_string(),
                source: e,
            })?;
            overlay(&mut doc, parse_ini(&text)?);
        }
        let mut cfg = Self::from_doc(&doc)?;
        if let Some(seed) = seed_override {
            cfg.plan.seed = seed;
            cfg.synth.seed = seed;
            cfg.train.seed = seed;
            cfg.split.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn from_doc(doc: &Doc) -> Result<Self, ConfigError> {
        let v = DocView(doc);
        let source = match v.get("plan", "source")? {
            "nbaiot" => DataSource::Nbaiot,
            "synth" => DataSource::Synth,
            other => {
                return Err(ConfigError::BadValue {
                    section: "plan".into(),
                    key: "source".into(),
                    value: other.into(),
                    ty: "nbaiot|synth",
                })
            }
        };
        let devices: Vec<String> = v
            .get("plan", "devices")?
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        let partition = match v.get("eval", "partition")? {
            "train" => EvalPartition::Train,
            "test" => EvalPartition::Test,
            other => {
                return Err(ConfigError::BadValue {
                    section: "eval".into(),
                    key: "partition".into(),
                    value: other.into(),
                    ty: "train|test",
                })
            }
        };

        Ok(RunConfig {
            plan: PlanSection {
                source,
                data_dir: PathBuf::from(v.get("plan", "data_dir")?),
                benign_total: v.parse("plan", "benign_total", "integer")?,
                per_attack_per_device: v.parse("plan", "per_attack_per_device", "integer")?,
                devices,
                seed: v.parse("plan", "seed", "integer")?,
            },
            synth: SynthSection {
                classes: v.parse("synth", "classes", "integer")?,
                width: v.parse("synth", "width", "integer")?,
                benign_total: v.parse("synth", "benign_total", "integer")?,
                per_attack: v.parse("synth", "per_attack", "integer")?,
                seed: v.parse("synth", "seed", "integer")?,
            },
            arch: ModelArch {
                hidden: v.parse("model", "hidden", "integer")?,
                spline_degree: v.parse("model", "spline_degree", "integer")?,
                grid_intervals: v.parse("model", "grid_intervals", "integer")?,
            },
            train: TrainSection {
                epochs: v.parse("train", "epochs", "integer")?,
                batch_size: v.parse("train", "batch_size", "integer")?,
                learning_rate: v.parse("train", "learning_rate", "number")?,
                beta1: v.parse("train", "beta1", "number")?,
                beta2: v.parse("train", "beta2", "number")?,
                epsilon: v.parse("train", "epsilon", "number")?,
                step_size: v.parse("train", "step_size", "integer")?,
                gamma: v.parse("train", "gamma", "number")?,
                seed: v.parse("train", "seed", "integer")?,
            },
            gbt: GbtSettings {
                rounds: v.parse("gbt", "rounds", "integer")?,
                learning_rate: v.parse("gbt", "learning_rate", "number")?,
                max_depth: v.parse("gbt", "max_depth", "integer")?,
                lambda: v.parse("gbt", "lambda", "number")?,
                gamma: v.parse("gbt", "gamma", "number")?,
                min_child_weight: v.parse("gbt", "min_child_weight", "number")?,
                base_score: v.parse("gbt", "base_score", "number")?,
            },
            split: SplitSection {
                test_fraction: v.parse("split", "test_fraction", "number")?,
                seed: v.parse("split", "seed", "integer")?,
            },
            eval_partition: partition,
            io: IoSection {
                dataset: v.opt("io", "dataset").map(PathBuf::from),
                model_kind: v.opt("io", "model_kind").map(str::to_string),
                model: v.opt("io", "model").map(PathBuf::from),
                gbt_model: v.opt("io", "gbt_model").map(PathBuf::from),
                stats: v.opt("io", "stats").map(PathBuf::from),
            },
        })
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.plan.devices.is_empty() {
            return Err(ConfigError::Invalid("plan.devices is empty".into()));
        }
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "split.test_fraction must be in (0, 1), got {}",
                self.split.test_fraction
            )));
        }
        if self.synth.classes < 2 || self.synth.width < 2 {
            return Err(ConfigError::Invalid(
                "synth profile needs at least 2 classes and 2 features".into(),
            ));
        }
        Ok(())
    }

    /// Serializes back to the key-value format; the output is a complete,
    /// valid `--config` input.
    pub fn to_snapshot(&self) -> String {
        let mut s = String::new();
        s.push_str("[plan]\n");
        s.push_str(&format!("source = {}\n", self.plan.source));
        s.push_str(&format!("data_dir = {}\n", self.plan.data_dir.display()));
        s.push_str(&format!("benign_total = {}\n", self.plan.benign_total));
        s.push_str(&format!(
            "per_attack_per_device = {}\n",
            self.plan.per_attack_per_device
        ));
        s.push_str(&format!("devices = {}\n", self.plan.devices.join(", ")));
        s.push_str(&format!("seed = {}\n\n", self.plan.seed));

        s.push_str("[synth]\n");
        s.push_str(&format!("classes = {}\n", self.synth.classes));
        s.push_str(&format!("width = {}\n", self.synth.width));
        s.push_str(&format!("benign_total = {}\n", self.synth.benign_total));
        s.push_str(&format!("per_attack = {}\n", self.synth.per_attack));
        s.push_str(&format!("seed = {}\n\n", self.synth.seed));

        s.push_str("[model]\n");
        s.push_str(&format!("hidden = {}\n", self.arch.hidden));
        s.push_str(&format!("spline_degree = {}\n", self.arch.spline_degree));
        s.push_str(&format!(
            "grid_intervals = {}\n\n",
            self.arch.grid_intervals
        ));

        s.push_str("[train]\n");
        s.push_str(&format!("epochs = {}\n", self.train.epochs));
        s.push_str(&format!("batch_size = {}\n", self.train.batch_size));
        s.push_str(&format!("learning_rate = {}\n", self.train.learning_rate));
        s.push_str(&format!("beta1 = {}\n", self.train.beta1));
        s.push_str(&format!("beta2 = {}\n", self.train.beta2));
        s.push_str(&format!("epsilon = {}\n", self.train.epsilon));
        s.push_str(&format!("step_size = {}\n", self.train.step_size));
        s.push_str(&format!("gamma = {}\n", self.train.gamma));
        s.push_str(&format!("seed = {}\n\n", self.train.seed));

        s.push_str("[gbt]\n");
        s.push_str(&format!("rounds = {}\n", self.gbt.rounds));
        s.push_str(&format!("learning_rate = {}\n", self.gbt.learning_rate));
        s.push_str(&format!("max_depth = {}\n", self.gbt.max_depth));
        s.push_str(&format!("lambda = {}\n", self.gbt.lambda));
        s.push_str(&format!("gamma = {}\n", self.gbt.gamma));
        s.push_str(&format!(
            "min_child_weight = {}\n",
            self.gbt.min_child_weight
        ));
        s.push_str(&format!("base_score = {}\n\n", self.gbt.base_score));

        s.push_str("[split]\n");
        s.push_str(&format!("test_fraction = {}\n", self.split.test_fraction));
        s.push_str(&format!("seed = {}\n\n", self.split.seed));

        s.push_str("[eval]\n");
        s.push_str(&format!(
            "partition = {}\n",
            match self.eval_partition {
                EvalPartition::Train => "train",
                EvalPartition::Test => "test",
            }
        ));

        let io = &self.io;
        if io.dataset.is_some()
            || io.model_kind.is_some()
            || io.model.is_some()
            || io.gbt_model.is_some()
            || io.stats.is_some()
        {
            s.push_str("\n[io]\n");
            if let Some(p) = &io.dataset {
                s.push_str(&format!("dataset = {}\n", p.display()));
            }
            if let Some(k) = &io.model_kind {
                s.push_str(&format!("model_kind = {k}\n"));
            }
            if let Some(p) = &io.model {
                s.push_str(&format!("model = {}\n", p.display()));
            }
            if let Some(p) = &io.gbt_model {
                s.push_str(&format!("gbt_model = {}\n", p.display()));
            }
            if let Some(p) = &io.stats {
                s.push_str(&format!("stats = {}\n", p.display()));
            }
        }
        s
    }
}
