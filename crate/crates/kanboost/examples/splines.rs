//! Tour of the B-spline engine: grid construction, basis evaluation,
//! derivatives, and spline curves.
//!
//! ```text
//! cargo run --example splines
//! ```

use kanboost::SplineGrid;

fn main() {
    // The classifier's grid: degree 5, 7 intervals on [-1, 1].
    let grid = SplineGrid::new(5, 7, -1.0, 1.0).expect("grid");
    println!(
        "grid: degree {}, {} intervals, {} knots, {} basis functions",
        grid.degree(),
        grid.interval_count(),
        grid.knots().len(),
        grid.basis_count()
    );

    println!("\nbasis values at a few points (each row sums to 1):");
    for &x in &[-1.0, -0.4, 0.0, 0.3, 1.0] {
        let v = grid.basis_values(x).expect("in domain");
        let sum: f64 = v.iter().sum();
        let peak = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        println!(
            "  x = {x:>5.2}  sum = {sum:.15}  dominant basis = {peak:>2}  max = {:.4}",
            v[peak]
        );
    }

    println!("\nderivatives sum to zero (differentiated partition of unity):");
    for &x in &[-0.7, 0.1, 0.8] {
        let d = grid.basis_derivatives(x).expect("in domain");
        println!("  x = {x:>5.2}  sum(d/dx) = {:+.2e}", d.iter().sum::<f64>());
    }

    // A spline through explicit coefficients: hump in the middle.
    let quad = SplineGrid::new(2, 3, 0.0, 3.0).expect("grid");
    let mut coeffs = vec![0.0; quad.basis_count()];
    coeffs[2] = 1.0;
    println!("\nsingle-coefficient quadratic spline on [0, 3]:");
    for i in 0..=12 {
        let x = 3.0 * i as f64 / 12.0;
        let y = quad.spline_eval(&coeffs, x).expect("in domain");
        let bar = "#".repeat((y * 40.0).round() as usize);
        println!("  x = {x:>4.2}  {y:.4}  {bar}");
    }
}
