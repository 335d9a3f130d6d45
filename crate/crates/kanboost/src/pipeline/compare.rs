//! Side-by-side training and evaluation of the three classifiers under
//! one split and one training configuration.

use super::hybrid::{
    train_hybrid, train_kan_classifier, train_mlp_classifier, GbtSettings, ModelArch,
};
use super::metrics::EvalReport;
use super::PipelineError;
use crate::data::{stratified_split, Dataset};
use crate::kan::TrainConfig;

/// Everything a comparison run needs besides the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub test_fraction: f64,
    pub split_seed: u64,
    pub train: TrainConfig,
    pub gbt: GbtSettings,
    pub arch: ModelArch,
}

/// One evaluated model: its report, per-epoch training loss, and (for
/// the hybrid) the per-round boosting loss.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub name: String,
    pub report: EvalReport,
    pub epoch_trace: Vec<f64>,
    pub round_trace: Option<Vec<f64>>,
}

/// Reports for `mlp`, `kan`, and `hybrid`, in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub outcomes: Vec<ModelOutcome>,
}

impl Comparison {
    pub fn outcome(&self, name: &str) -> Option<&ModelOutcome> {
        self.outcomes.iter().find(|o| o.name == name)
    }

    /// One CSV row per model with the four headline metrics in all three
    /// averaging modes.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "model,accuracy,\
             precision_micro,recall_micro,f1_micro,\
             precision_macro,recall_macro,f1_macro,\
             precision_weighted,recall_weighted,f1_weighted\n",
        );
        for o in &self.outcomes {
            let r = &o.report;
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                o.name,
                r.accuracy,
                r.micro.precision,
                r.micro.recall,
                r.micro.f1,
                r.macro_avg.precision,
                r.macro_avg.recall,
                r.macro_avg.f1,
                r.weighted.precision,
                r.weighted.recall,
                r.weighted.f1,
            ));
        }
        out
    }
}

/// Trains the MLP baseline, the network-only classifier, and the hybrid
/// under identical splits and seeds, evaluating each on the held-out
/// partition.
pub fn compare_models(dataset: &Dataset, cfg: &CompareConfig) -> Result<Comparison, PipelineError> {
    compare_models_with(dataset, cfg, |_| {})
}

/// [`compare_models`] with a per-model callback, fired as soon as each
/// outcome is ready so callers can flush partial results.
pub fn compare_models_with(
    dataset: &Dataset,
    cfg: &CompareConfig,
    mut on_outcome: impl FnMut(&ModelOutcome),
) -> Result<Comparison, PipelineError> {
    let (train_set, test_set) = stratified_split(dataset, cfg.test_fraction, cfg.split_seed)?;
    let class_names = dataset.class_names.clone();
    let mut outcomes = Vec::with_capacity(3);

    let (mlp, mlp_trace) = train_mlp_classifier(&train_set, &cfg.arch, &cfg.train)?;
    let mlp_report = EvalReport::evaluate_named(
        &mlp.predict(&test_set.features)?,
        &test_set.labels,
        class_names.clone(),
    )?;
    outcomes.push(ModelOutcome {
        name: "mlp".into(),
        report: mlp_report,
        epoch_trace: mlp_trace,
        round_trace: None,
    });
    on_outcome(outcomes.last().expect("just pushed"));

    let (kan, kan_trace) = train_kan_classifier(&train_set, &cfg.arch, &cfg.train)?;
    let kan_report = EvalReport::evaluate_named(
        &kan.predict(&test_set.features)?,
        &test_set.labels,
        class_names.clone(),
    )?;
    outcomes.push(ModelOutcome {
        name: "kan".into(),
        report: kan_report,
        epoch_trace: kan_trace,
        round_trace: None,
    });
    on_outcome(outcomes.last().expect("just pushed"));

    let (hybrid, hybrid_traces) = train_hybrid(&train_set, &cfg.arch, &cfg.train, &cfg.gbt)?;
    let hybrid_report = EvalReport::evaluate_named(
        &hybrid.predict(&test_set.features)?,
        &test_set.labels,
        class_names,
    )?;
    outcomes.push(ModelOutcome {
        name: "hybrid".into(),
        report: hybrid_report,
        epoch_trace: hybrid_traces.kan_epochs,
        round_trace: Some(hybrid_traces.gbt_rounds),
    });
    on_outcome(outcomes.last().expect("just pushed"));

    Ok(Comparison { outcomes })
}
