//! Train the spline-activation classifier on a synthetic botnet-style
//! dataset and print its held-out evaluation report.
//!
//! ```text
//! cargo run --release --example train_kan
//! ```

use kanboost::data::{stratified_split, synth_generate};
use kanboost::kan::TrainConfig;
use kanboost::pipeline::{train_kan_classifier, EvalReport, ModelArch};
use kanboost::SynthProfile;

fn main() {
    let dataset = synth_generate(&SynthProfile {
        classes: 6,
        width: 40,
        per_class: vec![900, 120, 120, 120, 120, 120],
        seed: 31,
    });
    let (train_set, test_set) = stratified_split(&dataset, 0.2, 5).expect("split");
    println!(
        "{} training rows, {} test rows, {} classes",
        train_set.rows(),
        test_set.rows(),
        dataset.n_classes()
    );

    let mut cfg = TrainConfig::default_profile(42);
    cfg.epochs = 30;
    cfg.batch_size = 128;
    cfg.learning_rate = 0.005;
    let arch = ModelArch {
        hidden: 8,
        ..ModelArch::default()
    };

    let (model, trace) = train_kan_classifier(&train_set, &arch, &cfg).expect("training");
    for (e, loss) in trace.iter().enumerate() {
        if (e + 1) % 5 == 0 {
            println!("epoch {:>3}  mean loss {loss:.5}", e + 1);
        }
    }

    let pred = model.predict(&test_set.features).expect("predict");
    let report = EvalReport::evaluate_named(&pred, &test_set.labels, dataset.class_names.clone())
        .expect("evaluate");
    println!(
        "\ntest accuracy {:.4} | weighted P {:.4} R {:.4} F1 {:.4}",
        report.accuracy, report.weighted.precision, report.weighted.recall, report.weighted.f1
    );
    println!("\nper-class:");
    for c in &report.per_class {
        println!(
            "  {:<10} precision {:.3}  recall {:.3}  f1 {:.3}  support {}",
            c.name, c.precision, c.recall, c.f1, c.support
        );
    }
}
