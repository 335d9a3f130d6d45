//! Networks with learnable spline edge activations, an MLP baseline, and
//! the shared training machinery (cross-entropy, Adam, step decay).
//!
//! A network layer maps `n_in` inputs to `n_out` outputs through a matrix
//! of learnable univariate edge functions. Each edge computes
//!
//! ```text
//! phi(x) = w_b * silu(x) + w_s * spline(squash(x))
//! ```
//!
//! where the spline coefficients, the residual weight `w_b`, and the scale
//! `w_s` are all trained, and `squash(x) = clamp(x / 3)` maps activations
//! into the spline grid domain. Node outputs are the plain sums of their
//! incoming edge values; stacking layers composes the maps. Gradients are
//! exact reverse-mode derivatives of this computation, including the zero
//! slope of the squash outside its linear region.

mod adam;
mod layer;
mod loss;
mod mlp;
mod network;
mod train;

pub use adam::{adam_step, step_lr, AdamParams, AdamState};
pub use layer::{KanLayer, KanLayerGrads, LayerDetail};
pub use loss::{softmax_cross_entropy, squared_error};
pub use mlp::{MlpGrads, MlpNetwork};
pub use network::{KanCache, KanGrads, KanNetwork};
pub use train::{loss_trace_csv, train, train_regression, TrainConfig, Trainable};

use crate::splines::SplineError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KanError {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("label {label} out of range for {classes} classes (row {row})")]
    LabelOutOfRange {
        row: usize,
        label: u32,
        classes: usize,
    },

    #[error("network needs at least two layers to expose hidden activations")]
    NoHiddenLayer,

    #[error("a network needs at least two widths (input and output), got {0}")]
    TooFewWidths(usize),

    #[error("layer widths must be positive")]
    ZeroWidth,

    #[error("training aborted: non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Spline(#[from] SplineError),
}

/// Numerically stable logistic function.
pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn silu(x: f64) -> f64 {
    x * logistic(x)
}

pub(crate) fn silu_prime(x: f64) -> f64 {
    let s = logistic(x);
    s * (1.0 + x * (1.0 - s))
}

/// Maps an activation into the spline grid domain: `x / 3` covers three
/// standard deviations of a standardized input, clamped at the domain edge.
pub(crate) fn squash(x: f64, lo: f64, hi: f64) -> f64 {
    (x / 3.0).clamp(lo, hi)
}

/// Exact slope of [`squash`]: 1/3 strictly inside the domain, 0 where the
/// clamp is active.
pub(crate) fn squash_prime(x: f64, lo: f64, hi: f64) -> f64 {
    let u = x / 3.0;
    if u > lo && u < hi {
        1.0 / 3.0
    } else {
        0.0
    }
}

/// Test-only oracle: central finite differences over every parameter.
#[cfg(test)]
pub(crate) mod gradcheck {
    use super::{softmax_cross_entropy, Trainable};
    use crate::matrix::Matrix;

    fn ce_loss<M: Trainable>(model: &M, batch: &Matrix, labels: &[u32]) -> f64 {
        let logits = model.logits(batch).expect("forward");
        softmax_cross_entropy(&logits, labels).expect("loss").0
    }

    /// Largest relative disagreement between analytic gradients and
    /// central finite differences (h = 1e-5) across all parameters.
    pub fn max_rel_error<M: Trainable>(model: &mut M, batch: &Matrix, labels: &[u32]) -> f64 {
        let h = 1e-5;
        let (_, analytic) = model.loss_and_grads(batch, labels).expect("backward");
        let mut max_rel = 0.0f64;
        for (t, tensor) in analytic.iter().enumerate() {
            for i in 0..tensor.len() {
                let orig = model.params_mut()[t][i];
                model.params_mut()[t][i] = orig + h;
                let up = ce_loss(model, batch, labels);
                model.params_mut()[t][i] = orig - h;
                let down = ce_loss(model, batch, labels);
                model.params_mut()[t][i] = orig;
                let fd = (up - down) / (2.0 * h);
                let a = tensor[i];
                let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1.0);
                max_rel = max_rel.max(rel);
            }
        }
        max_rel
    }
}
