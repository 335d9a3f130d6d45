//! The full two-stage pipeline on the desk-scale synthetic profile:
//! train the spline network with cross-entropy, extract its 10-unit
//! hidden representation, fit boosted trees on it, and evaluate.
//!
//! ```text
//! cargo run --release --example hybrid
//! ```

use kanboost::data::{stratified_split, synth_generate};
use kanboost::kan::TrainConfig;
use kanboost::pipeline::{train_hybrid, EvalReport, GbtSettings, ModelArch};
use kanboost::SynthProfile;

fn main() {
    // 5,000 rows, 115 features, 11 classes with the dominant benign class.
    let dataset = synth_generate(&SynthProfile::desk_scale(7));
    let (train_set, test_set) = stratified_split(&dataset, 0.2, 42).expect("split");
    println!(
        "dataset: {} rows ({} train / {} test), {} features",
        dataset.rows(),
        train_set.rows(),
        test_set.rows(),
        dataset.width()
    );

    let tc = TrainConfig::default_profile(42);
    let (model, traces) = train_hybrid(
        &train_set,
        &ModelArch::default(),
        &tc,
        &GbtSettings::default(),
    )
    .expect("hybrid training");

    println!(
        "stage 1: network loss {:.4} -> {:.4} over {} epochs",
        traces.kan_epochs.first().unwrap(),
        traces.kan_epochs.last().unwrap(),
        traces.kan_epochs.len()
    );
    println!(
        "stage 2: {}-unit representation feeds the tree stage",
        model.representation_width()
    );
    println!(
        "stage 3: boosting loss {:.4} -> {:.4} over {} rounds",
        traces.gbt_rounds.first().unwrap(),
        traces.gbt_rounds.last().unwrap(),
        traces.gbt_rounds.len() - 1
    );

    let pred = model.predict(&test_set.features).expect("predict");
    let report = EvalReport::evaluate_named(&pred, &test_set.labels, dataset.class_names.clone())
        .expect("evaluate");
    println!(
        "\nhybrid test metrics: accuracy {:.4} | weighted P {:.4} R {:.4} F1 {:.4}",
        report.accuracy, report.weighted.precision, report.weighted.recall, report.weighted.f1
    );

    let diag: u64 = (0..report.confusion.len())
        .map(|i| report.confusion[i][i])
        .sum();
    println!(
        "confusion diagonal holds {diag} of {} evaluated rows",
        report.total
    );
}
