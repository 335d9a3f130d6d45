//! Function approximation with learnable spline activations: a tiny
//! [1, 5, 1] network fits f(x) = sin(pi x) on [-1, 1] by plain
//! squared-error training.
//!
//! ```text
//! cargo run --release --example sine_fit
//! ```

use kanboost::kan::{train_regression, TrainConfig};
use kanboost::{KanNetwork, Matrix};

fn rmse(net: &KanNetwork, xs: &Matrix, ys: &Matrix) -> f64 {
    let pred = net.forward(xs).expect("forward");
    let n = xs.rows() as f64;
    let sse: f64 = pred
        .as_slice()
        .iter()
        .zip(ys.as_slice())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    (sse / n).sqrt()
}

fn main() {
    let n = 2048;
    let xs = Matrix::from_rows(
        &(0..n)
            .map(|i| vec![-1.0 + 2.0 * i as f64 / (n - 1) as f64])
            .collect::<Vec<_>>(),
    );
    let ys = Matrix::from_rows(
        &(0..n)
            .map(|i| vec![(std::f64::consts::PI * xs.get(i, 0)).sin()])
            .collect::<Vec<_>>(),
    );

    let mut net = KanNetwork::new(&[1, 5, 1], 5, 7, 17).expect("network");
    let mut cfg = TrainConfig::default_profile(4);
    cfg.epochs = 200;
    cfg.batch_size = 256;
    cfg.learning_rate = 0.02;
    cfg.step_size = 50;
    cfg.gamma = 0.5;

    println!("fitting sin(pi x) with a [1, 5, 1] spline network");
    println!("initial rmse: {:.5}", rmse(&net, &xs, &ys));
    let trace = train_regression(&mut net, &xs, &ys, &cfg).expect("training");
    for (e, loss) in trace.iter().enumerate() {
        if (e + 1) % 25 == 0 {
            println!("epoch {:>3}  mse {:.6}", e + 1, loss);
        }
    }
    let final_rmse = rmse(&net, &xs, &ys);
    println!("final rmse: {final_rmse:.5}");

    println!("\n    x     sin(pi x)   network");
    for i in (0..n).step_by(n / 8) {
        let x = xs.get(i, 0);
        let y = ys.get(i, 0);
        let p = net
            .forward(&Matrix::from_rows(&[vec![x]]))
            .unwrap()
            .get(0, 0);
        println!("{x:>7.3}  {y:>9.4}  {p:>9.4}");
    }
    assert!(final_rmse < 0.02, "expected rmse < 0.02");
}
