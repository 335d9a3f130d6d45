//! Second-order boosted trees on their own: fit two interleaved Gaussian
//! clouds and watch the softmax loss fall round by round.
//!
//! ```text
//! cargo run --example gbt
//! ```

use kanboost::rng::SeededRng;
use kanboost::{GbtModel, GbtParams, Matrix};

fn main() {
    let mut rng = SeededRng::new(8);
    let n_per = 400;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..2 * n_per {
        let class = (i % 2) as u32;
        let (cx, cy) = if class == 0 { (0.0, 0.0) } else { (1.5, 1.5) };
        rows.push(vec![cx + 0.7 * rng.normal(), cy + 0.7 * rng.normal()]);
        labels.push(class);
    }
    let features = Matrix::from_rows(&rows);

    let mut params = GbtParams::default_profile(2);
    params.rounds = 25;
    params.max_depth = 3;
    println!(
        "fitting {} trees/class, depth {}, lr {}",
        params.rounds, params.max_depth, params.learning_rate
    );

    let model = GbtModel::fit(&features, &labels, params).expect("fit");
    for (round, loss) in model.training_loss().iter().enumerate() {
        if round % 5 == 0 || round == params.rounds {
            println!("  round {round:>3}  train softmax loss {loss:.5}");
        }
    }

    let (_, pred) = model.predict(&features).expect("predict");
    let correct = pred.iter().zip(&labels).filter(|(a, b)| a == b).count();
    println!(
        "training accuracy: {:.4}",
        correct as f64 / labels.len() as f64
    );

    // The ensemble is an ordinary value: serialize and reload it.
    let bytes = model.to_bytes();
    let back = GbtModel::from_bytes(&bytes).expect("decode");
    let (_, again) = back.predict(&features).expect("predict");
    assert_eq!(pred, again);
    println!("serialized {} bytes, reload agrees", bytes.len());
}
