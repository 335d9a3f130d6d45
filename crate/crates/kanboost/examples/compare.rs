//! Three-model comparison (MLP, spline network, hybrid) under one split
//! and one training configuration, printing the summary table the
//! `compare` command writes as CSV.
//!
//! ```text
//! cargo run --release --example compare
//! ```

use kanboost::data::synth_generate;
use kanboost::kan::TrainConfig;
use kanboost::pipeline::{compare_models, CompareConfig, GbtSettings, ModelArch};
use kanboost::SynthProfile;

fn main() {
    // A reduced profile keeps the three trainings quick.
    let dataset = synth_generate(&SynthProfile {
        classes: 11,
        width: 115,
        per_class: {
            let mut v = vec![40; 11];
            v[0] = 1000;
            v
        },
        seed: 7,
    });

    let mut train = TrainConfig::default_profile(42);
    train.epochs = 25;
    train.learning_rate = 0.005;
    let cfg = CompareConfig {
        test_fraction: 0.2,
        split_seed: 42,
        train,
        gbt: GbtSettings {
            rounds: 60,
            ..GbtSettings::default()
        },
        arch: ModelArch::default(),
    };

    let comparison = compare_models(&dataset, &cfg).expect("comparison");
    println!(
        "{:<8} {:>9} {:>12} {:>9} {:>9}",
        "model", "accuracy", "precision_w", "recall_w", "f1_w"
    );
    for o in &comparison.outcomes {
        println!(
            "{:<8} {:>9.4} {:>12.4} {:>9.4} {:>9.4}",
            o.name,
            o.report.accuracy,
            o.report.weighted.precision,
            o.report.weighted.recall,
            o.report.weighted.f1
        );
    }

    println!("\nsummary csv:\n{}", comparison.summary_csv());

    let hybrid = comparison.outcome("hybrid").expect("hybrid row");
    let kan = comparison.outcome("kan").expect("kan row");
    assert!(
        hybrid.report.accuracy >= kan.report.accuracy,
        "the hybrid should not trail its own feature extractor"
    );
}
