//! Training losses and their gradients with respect to the logits.

use super::KanError;
use crate::matrix::Matrix;

/// Mean cross-entropy of softmax class probabilities.
///
/// Returns the mean over rows of `-log softmax(logits)[label]` together
/// with the gradient `(softmax - onehot) / rows`. The log-sum-exp is
/// max-shifted, so arbitrarily large logits stay finite.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[u32]) -> Result<(f64, Matrix), KanError> {
    let rows = logits.rows();
    let classes = logits.cols();
    if labels.len() != rows {
        return Err(KanError::ShapeMismatch {
            context: "softmax_cross_entropy labels",
            expected: rows,
            got: labels.len(),
        });
    }

    let mut grad = Matrix::zeros(rows, classes);
    let mut total = 0.0;
    let inv_rows = 1.0 / rows as f64;
    for r in 0..rows {
        let label = labels[r];
        if label as usize >= classes {
            return Err(KanError::LabelOutOfRange {
                row: r,
                label,
                classes,
            });
        }
        let row = logits.row(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = row.iter().map(|&l| (l - max).exp()).sum();
        let lse = max + sum_exp.ln();
        total += lse - row[label as usize];

        let g = grad.row_mut(r);
        for c in 0..classes {
            let p = (row[c] - lse).exp();
            g[c] = (p - if c == label as usize { 1.0 } else { 0.0 }) * inv_rows;
        }
    }
    Ok((total * inv_rows, grad))
}

/// Mean squared error over all entries, with gradient `2 (pred - target) / n`.
pub fn squared_error(pred: &Matrix, target: &Matrix) -> (f64, Matrix) {
    assert_eq!(pred.rows(), target.rows(), "row count mismatch");
    assert_eq!(pred.cols(), target.cols(), "column count mismatch");
    let n = (pred.rows() * pred.cols()) as f64;
    let mut grad = Matrix::zeros(pred.rows(), pred.cols());
    let mut total = 0.0;
    for ((g, &p), &t) in grad
        .as_mut_slice()
        .iter_mut()
        .zip(pred.as_slice())
        .zip(target.as_slice())
    {
        let d = p - t;
        total += d * d;
        *g = 2.0 * d / n;
    }
    (total / n, grad)
}
