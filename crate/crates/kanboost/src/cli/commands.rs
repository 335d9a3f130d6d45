//! The five commands behind the binary: `prepare`, `synth`, `train`,
//! `eval`, and `compare`.
//!
//! Every command resolves its configuration, writes its artifacts under
//! `--out`, and finishes with a `config.snapshot` describing exactly what
//! ran (with `[io]` pointing at the produced files), so the next command
//! can take that snapshot as its `--config`.

use super::config::{DataSource, EvalPartition, RunConfig};
use super::CliError;
use crate::data::{
    build_subset, count_csv_rows, dataset_from_csv, dataset_to_csv, proportional_allocation,
    sample_device_csv, stratified_split, synth_generate, Dataset, SamplingPlan, StandardStats,
    SynthProfile, TRAFFIC_KINDS,
};
use crate::io::fnv1a64;
use crate::kan::{loss_trace_csv, KanNetwork, MlpNetwork};
use crate::matrix::Matrix;
use crate::pipeline::{
    compare_models_with, train_hybrid, train_kan_classifier, train_mlp_classifier, CompareConfig,
    EvalReport, HybridModel, KanClassifier, MlpClassifier,
};
use crate::rng::derive_seed;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Which classifier `train` fits (and `eval` loads).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Mlp,
    Kan,
    Hybrid,
}

impl ModelChoice {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "mlp" => Ok(Self::Mlp),
            "kan" => Ok(Self::Kan),
            "hybrid" => Ok(Self::Hybrid),
            other => Err(CliError::Usage(format!(
                "unknown model {other:?} (expected mlp, kan, or hybrid)"
            ))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Mlp => "mlp",
            Self::Kan => "kan",
            Self::Hybrid => "hybrid",
        }
    }
}

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::write(out, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::write(path, e))
}

fn write_snapshot(cfg: &RunConfig, out: &Path) -> Result<PathBuf, CliError> {
    let path = out.join("config.snapshot");
    write_file(&path, cfg.to_snapshot().as_bytes())?;
    Ok(path)
}

fn stats_csv(stats: &StandardStats) -> String {
    let mut s = String::from("feature,mean,stddev\n");
    for (i, (m, sd)) in stats.mean.iter().zip(&stats.stddev).enumerate() {
        let _ = writeln!(s, "{i},{m:.16e},{sd:.16e}");
    }
    s
}

fn stats_from_csv(path: &Path) -> Result<StandardStats, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    let mut mean = Vec::new();
    let mut stddev = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(CliError::Usage(format!(
                "{}: line {} is not feature,mean,stddev",
                path.display(),
                i + 1
            )));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.trim().parse().map_err(|_| {
                CliError::Usage(format!(
                    "{}: bad number {s:?} on line {}",
                    path.display(),
                    i + 1
                ))
            })
        };
        mean.push(parse(cells[1])?);
        stddev.push(parse(cells[2])?);
    }
    if mean.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no statistics rows",
            path.display()
        )));
    }
    Ok(StandardStats { mean, stddev })
}

/// Key-value manifest writer with insertion order preserved.
struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    fn new(command: &str) -> Self {
        Self {
            lines: vec![("command".into(), command.into())],
        }
    }

    fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn dataset_manifest(manifest: &mut Manifest, dataset: &Dataset) {
    manifest.push("rows", dataset.rows());
    manifest.push("features", dataset.width());
    manifest.push("classes", dataset.n_classes());
    for (c, count) in dataset.class_histogram().iter().enumerate() {
        manifest.push(
            format!("class_count_{c:02}_{}", dataset.class_names[c]),
            count,
        );
    }
    let mut per_device = vec![0usize; dataset.device_names.len()];
    for &d in &dataset.device_of_row {
        per_device[d as usize] += 1;
    }
    for (d, count) in per_device.iter().enumerate() {
        manifest.push(format!("device_count_{}", dataset.device_names[d]), count);
    }
}

fn write_dataset_artifacts(
    mut cfg: RunConfig,
    out: &Path,
    dataset: &Dataset,
    mut manifest: Manifest,
) -> Result<(), CliError> {
    ensure_out_dir(out)?;
    let dataset_path = out.join("dataset.csv");
    let csv = dataset_to_csv(dataset);
    write_file(&dataset_path, csv.as_bytes())?;

    dataset_manifest(&mut manifest, dataset);
    // Name only: the dataset sits next to the manifest, and manifests
    // from reruns into different directories must be byte-identical.
    manifest.push("dataset_file", "dataset.csv");
    manifest.push(
        "dataset_fnv1a64",
        format!("{:016x}", fnv1a64(csv.as_bytes())),
    );
    write_file(&out.join("manifest.txt"), manifest.render().as_bytes())?;

    cfg.io.dataset = Some(dataset_path);
    write_snapshot(&cfg, out)?;
    Ok(())
}

fn synth_profile_of(cfg: &RunConfig) -> SynthProfile {
    let mut per_class = vec![cfg.synth.per_attack; cfg.synth.classes];
    per_class[0] = cfg.synth.benign_total;
    SynthProfile {
        classes: cfg.synth.classes,
        width: cfg.synth.width,
        per_class,
        seed: cfg.synth.seed,
    }
}

/// Generates a synthetic dataset plus manifest.
pub fn cmd_synth(cfg: RunConfig, out: &Path) -> Result<(), CliError> {
    let profile = synth_profile_of(&cfg);
    let dataset = synth_generate(&profile);
    let mut manifest = Manifest::new("synth");
    manifest.push("seed", profile.seed);
    write_dataset_artifacts(cfg, out, &dataset, manifest)?;
    println!(
        "synth: wrote {} rows to {}",
        profile.total_rows(),
        out.display()
    );
    Ok(())
}

/// Relative path of one (device, kind) source file under the data dir.
fn source_rel_path(device: &str, kind: &str) -> PathBuf {
    if kind == "benign" {
        return PathBuf::from(device).join("benign_traffic.csv");
    }
    let (family_dir, file) = kind
        .split_once('_')
        .map(|(family, variant)| (format!("{family}_attacks"), format!("{variant}.csv")))
        .expect("attack kinds are family_variant");
    PathBuf::from(device).join(family_dir).join(file)
}

/// Builds the experimental subset and its manifest.
///
/// With `source = synth` this generates the synthetic dataset instead of
/// reading device files. With `source = nbaiot` it samples every
/// (device, kind) cell down to the plan's counts while parsing — only
/// sampled rows are materialized — and then assembles and shuffles the
/// subset.
pub fn cmd_prepare(cfg: RunConfig, out: &Path) -> Result<(), CliError> {
    if cfg.plan.source == DataSource::Synth {
        let profile = synth_profile_of(&cfg);
        let dataset = synth_generate(&profile);
        let mut manifest = Manifest::new("prepare");
        manifest.push("source", "synth");
        manifest.push("seed", profile.seed);
        write_dataset_artifacts(cfg, out, &dataset, manifest)?;
        println!("prepare: wrote synthetic dataset to {}", out.display());
        return Ok(());
    }

    let data_dir = &cfg.plan.data_dir;
    if !data_dir.is_dir() {
        return Err(CliError::Usage(format!(
            "plan.data_dir {} does not exist",
            data_dir.display()
        )));
    }
    let attacks: Vec<String> = TRAFFIC_KINDS[1..].iter().map(|s| s.to_string()).collect();
    let plan = SamplingPlan {
        benign_total: cfg.plan.benign_total,
        per_attack_per_device: cfg.plan.per_attack_per_device,
        devices: cfg.plan.devices.clone(),
        attacks: attacks.clone(),
        rng_seed: cfg.plan.seed,
    };

    // Pass 1: benign row counts fix the proportional quotas.
    let benign_paths: Vec<PathBuf> = plan
        .devices
        .iter()
        .map(|d| data_dir.join(source_rel_path(d, "benign")))
        .collect();
    let mut available = Vec::with_capacity(benign_paths.len());
    for p in &benign_paths {
        available.push(count_csv_rows(p)?);
    }
    let pool: usize = available.iter().sum();
    if pool < plan.benign_total {
        return Err(CliError::Usage(format!(
            "benign pool across devices has {pool} rows, plan needs {}",
            plan.benign_total
        )));
    }
    let quotas = proportional_allocation(&available, plan.benign_total);

    // Pass 2: sample each source file down to its quota while parsing.
    let mut manifest = Manifest::new("prepare");
    manifest.push("source", "nbaiot");
    manifest.push("seed", plan.rng_seed);
    let mut fragments = Vec::new();
    let mut stream = 0u64;
    for (d, device) in plan.devices.iter().enumerate() {
        let seed = derive_seed(plan.rng_seed, derive_seed(1, stream));
        stream += 1;
        fragments.push(sample_device_csv(
            &benign_paths[d],
            device,
            "benign",
            quotas[d],
            seed,
        )?);
    }
    for device in &plan.devices {
        for attack in &attacks {
            let path = data_dir.join(source_rel_path(device, attack));
            let seed = derive_seed(plan.rng_seed, derive_seed(1, stream));
            stream += 1;
            fragments.push(sample_device_csv(
                &path,
                device,
                attack,
                plan.per_attack_per_device,
                seed,
            )?);
        }
    }

    // Source checksums over the raw bytes.
    for device in &plan.devices {
        for kind in TRAFFIC_KINDS.iter() {
            let path = data_dir.join(source_rel_path(device, kind));
            let bytes = fs::read(&path).map_err(|e| CliError::read(&path, e))?;
            manifest.push(
                format!("source_fnv1a64_{device}_{kind}"),
                format!("{:016x}", fnv1a64(&bytes)),
            );
        }
    }

    let dataset = build_subset(&fragments, &plan)?;
    write_dataset_artifacts(cfg, out, &dataset, manifest)?;
    println!(
        "prepare: wrote {} rows to {}",
        plan.total_rows(),
        out.display()
    );
    Ok(())
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let path = cfg.io.dataset.as_ref().ok_or_else(|| {
        CliError::Usage("no [io] dataset in config; run `prepare` or `synth` first".into())
    })?;
    Ok(dataset_from_csv(path)?)
}

/// Trains the selected model on the training partition and persists the
/// serialized model, the loss trace, and the resolved configuration.
pub fn cmd_train(mut cfg: RunConfig, out: &Path, choice: ModelChoice) -> Result<(), CliError> {
    let dataset = load_dataset(&cfg)?;
    let (train_set, _) = stratified_split(&dataset, cfg.split.test_fraction, cfg.split.seed)?;
    let tc = cfg.train.to_train_config();
    ensure_out_dir(out)?;

    let stats;
    match choice {
        ModelChoice::Mlp => {
            let (model, trace) = train_mlp_classifier(&train_set, &cfg.arch, &tc)?;
            let path = out.join("model_mlp.bin");
            write_file(&path, &model.net.to_bytes())?;
            write_file(&out.join("loss.csv"), loss_trace_csv(&trace).as_bytes())?;
            cfg.io.model = Some(path);
            stats = model.stats;
        }
        ModelChoice::Kan => {
            let (model, trace) = train_kan_classifier(&train_set, &cfg.arch, &tc)?;
            let path = out.join("model_kan.bin");
            write_file(&path, &model.net.to_bytes())?;
            write_file(&out.join("loss.csv"), loss_trace_csv(&trace).as_bytes())?;
            cfg.io.model = Some(path);
            stats = model.stats;
        }
        ModelChoice::Hybrid => {
            let (model, traces) = train_hybrid(&train_set, &cfg.arch, &tc, &cfg.gbt)?;
            let kan_path = out.join("model_kan.bin");
            let gbt_path = out.join("model_gbt.bin");
            write_file(&kan_path, &model.kan.to_bytes())?;
            write_file(&gbt_path, &model.gbt.to_bytes())?;
            write_file(
                &out.join("loss.csv"),
                loss_trace_csv(&traces.kan_epochs).as_bytes(),
            )?;
            let mut gbt_csv = String::from("round,loss\n");
            for (r, l) in traces.gbt_rounds.iter().enumerate() {
                let _ = writeln!(gbt_csv, "{r},{l:.17e}");
            }
            write_file(&out.join("gbt_loss.csv"), gbt_csv.as_bytes())?;
            cfg.io.model = Some(kan_path);
            cfg.io.gbt_model = Some(gbt_path);
            stats = model.stats;
        }
    }
    let stats_path = out.join("stats.csv");
    write_file(&stats_path, stats_csv(&stats).as_bytes())?;
    cfg.io.stats = Some(stats_path);
    cfg.io.model_kind = Some(choice.name().into());
    write_snapshot(&cfg, out)?;
    println!(
        "train: {} model written to {}",
        choice.name(),
        out.display()
    );
    Ok(())
}

/// Prediction closure over raw (unstandardized) feature rows.
type Predictor = Box<dyn Fn(&Matrix) -> Result<Vec<u32>, CliError>>;

fn load_trained(
    cfg: &RunConfig,
    feature_width: usize,
) -> Result<(ModelChoice, Predictor), CliError> {
    let kind =
        cfg.io.model_kind.as_deref().ok_or_else(|| {
            CliError::Usage("no [io] model_kind in config; run `train` first".into())
        })?;
    let choice = ModelChoice::parse(kind)?;
    let stats_path = cfg
        .io
        .stats
        .as_ref()
        .ok_or_else(|| CliError::Usage("no [io] stats in config".into()))?;
    let stats = stats_from_csv(stats_path)?;
    if stats.mean.len() != feature_width {
        return Err(CliError::Kan(crate::kan::KanError::ShapeMismatch {
            context: "model vs dataset feature width",
            expected: stats.mean.len(),
            got: feature_width,
        }));
    }
    let model_path = cfg
        .io
        .model
        .as_ref()
        .ok_or_else(|| CliError::Usage("no [io] model in config".into()))?;
    let bytes = fs::read(model_path).map_err(|e| CliError::read(model_path, e))?;

    let predict: Predictor = match choice {
        ModelChoice::Mlp => {
            let model = MlpClassifier {
                stats,
                net: MlpNetwork::from_bytes(&bytes)?,
            };
            Box::new(move |m| Ok(model.predict(m)?))
        }
        ModelChoice::Kan => {
            let model = KanClassifier {
                stats,
                net: KanNetwork::from_bytes(&bytes)?,
            };
            Box::new(move |m| Ok(model.predict(m)?))
        }
        ModelChoice::Hybrid => {
            let gbt_path = cfg
                .io
                .gbt_model
                .as_ref()
                .ok_or_else(|| CliError::Usage("no [io] gbt_model in config".into()))?;
            let gbt_bytes = fs::read(gbt_path).map_err(|e| CliError::read(gbt_path, e))?;
            let model = HybridModel {
                stats,
                kan: KanNetwork::from_bytes(&bytes)?,
                gbt: crate::boost::GbtModel::from_bytes(&gbt_bytes)?,
            };
            Box::new(move |m| Ok(model.predict(m)?))
        }
    };
    Ok((choice, predict))
}

/// Evaluates the trained model on the configured partition, writing the
/// metrics JSON and the confusion-matrix CSV.
pub fn cmd_eval(cfg: RunConfig, out: &Path) -> Result<(), CliError> {
    let dataset = load_dataset(&cfg)?;
    let (train_set, test_set) =
        stratified_split(&dataset, cfg.split.test_fraction, cfg.split.seed)?;
    let part = match cfg.eval_partition {
        EvalPartition::Train => &train_set,
        EvalPartition::Test => &test_set,
    };
    let (choice, predict) = load_trained(&cfg, dataset.width())?;
    let predictions = predict(&part.features)?;
    let report =
        EvalReport::evaluate_named(&predictions, &part.labels, dataset.class_names.clone())?;

    ensure_out_dir(out)?;
    write_file(&out.join("report.json"), report.to_json().as_bytes())?;
    write_file(
        &out.join("confusion.csv"),
        report.confusion_csv().as_bytes(),
    )?;
    write_snapshot(&cfg, out)?;
    println!(
        "eval: model={} partition={} accuracy={:.4} precision_w={:.4} recall_w={:.4} f1_w={:.4}",
        choice.name(),
        match cfg.eval_partition {
            EvalPartition::Train => "train",
            EvalPartition::Test => "test",
        },
        report.accuracy,
        report.weighted.precision,
        report.weighted.recall,
        report.weighted.f1,
    );
    Ok(())
}

/// Runs the three-model comparison, flushing each model's artifacts as
/// soon as it finishes. On failure the partial comparison CSV carries a
/// failure marker line.
pub fn cmd_compare(cfg: RunConfig, out: &Path) -> Result<(), CliError> {
    let dataset = load_dataset(&cfg)?;
    ensure_out_dir(out)?;
    let compare_cfg = CompareConfig {
        test_fraction: cfg.split.test_fraction,
        split_seed: cfg.split.seed,
        train: cfg.train.to_train_config(),
        gbt: cfg.gbt,
        arch: cfg.arch,
    };

    let csv_path = out.join("comparison.csv");
    let mut flush_errors: Vec<String> = Vec::new();
    let result = compare_models_with(&dataset, &compare_cfg, |outcome| {
        let write = || -> Result<(), CliError> {
            write_file(
                &out.join(format!("loss_{}.csv", outcome.name)),
                loss_trace_csv(&outcome.epoch_trace).as_bytes(),
            )?;
            if let Some(rounds) = &outcome.round_trace {
                let mut s = String::from("round,loss\n");
                for (r, l) in rounds.iter().enumerate() {
                    let _ = writeln!(s, "{r},{l:.17e}");
                }
                write_file(&out.join("loss_hybrid_gbt.csv"), s.as_bytes())?;
            }
            write_file(
                &out.join(format!("report_{}.json", outcome.name)),
                outcome.report.to_json().as_bytes(),
            )?;
            write_file(
                &out.join(format!("confusion_{}.csv", outcome.name)),
                outcome.report.confusion_csv().as_bytes(),
            )?;
            Ok(())
        };
        if let Err(e) = write() {
            flush_errors.push(e.to_string());
        }
        println!(
            "compare: {:>6}  accuracy={:.4} precision_w={:.4} recall_w={:.4} f1_w={:.4}",
            outcome.name,
            outcome.report.accuracy,
            outcome.report.weighted.precision,
            outcome.report.weighted.recall,
            outcome.report.weighted.f1,
        );
    });
    if let Some(e) = flush_errors.into_iter().next() {
        return Err(CliError::Usage(e));
    }

    match result {
        Ok(comparison) => {
            write_file(&csv_path, comparison.summary_csv().as_bytes())?;
            write_snapshot(&cfg, out)?;
            println!("compare: table written to {}", csv_path.display());
            Ok(())
        }
        Err(e) => {
            // Flush a failure marker so partial runs are recognizable.
            let marker = format!("model,error\nFAILED,{e}\n");
            write_file(&csv_path, marker.as_bytes())?;
            Err(e.into())
        }
    }
}
