//! Mini-batch training loop shared by the spline network and the MLP.

use super::adam::{adam_step, step_lr, AdamParams, AdamState};
use super::loss::squared_error;
use super::network::KanNetwork;
use super::KanError;
use crate::matrix::Matrix;
use crate::rng::{derive_seed, SeededRng};

/// Epochs, batching, optimizer, and schedule settings for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam: AdamParams,
    /// Epochs between learning-rate decays.
    pub step_size: usize,
    /// Multiplicative decay factor in `(0, 1]`.
    pub gamma: f64,
    pub rng_seed: u64,
}

impl TrainConfig {
    /// The shipped default profile: 50 epochs, batch 512, Adam at 1e-3,
    /// halving the rate every 10 epochs.
    pub fn default_profile(seed: u64) -> Self {
        Self {
            epochs: 50,
            batch_size: 512,
            learning_rate: 1e-3,
            adam: AdamParams::default(),
            step_size: 10,
            gamma: 0.5,
            rng_seed: seed,
        }
    }

    fn validate(&self) -> Result<(), KanError> {
        if self.epochs == 0 {
            return Err(KanError::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(KanError::InvalidConfig(
                "batch_size must be at least 1".into(),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(KanError::InvalidConfig(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(KanError::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// A model the shared loop can train with cross-entropy: both network
/// kinds expose their parameters as flat tensors in a fixed order.
pub trait Trainable {
    fn input_width(&self) -> usize;
    fn output_width(&self) -> usize;
    fn logits(&self, batch: &Matrix) -> Result<Matrix, KanError>;
    /// Mean cross-entropy over the batch plus one gradient buffer per
    /// parameter tensor, in the same order as [`Trainable::params_mut`].
    fn loss_and_grads(
        &self,
        batch: &Matrix,
        labels: &[u32],
    ) -> Result<(f64, Vec<Vec<f64>>), KanError>;
    fn params_mut(&mut self) -> Vec<&mut [f64]>;
}

/// Shuffled mini-batch Adam with step decay.
///
/// Epoch `e` draws its shuffle from `derive_seed(rng_seed, e)`, so a run
/// is bit-reproducible given the configuration. Returns the mean training
/// loss per epoch.
pub fn train<M: Trainable>(
    model: &mut M,
    features: &Matrix,
    labels: &[u32],
    cfg: &TrainConfig,
) -> Result<Vec<f64>, KanError> {
    cfg.validate()?;
    let rows = features.rows();
    if rows == 0 {
        return Err(KanError::EmptyDataset);
    }
    if labels.len() != rows {
        return Err(KanError::ShapeMismatch {
            context: "training labels",
            expected: rows,
            got: labels.len(),
        });
    }
    if features.cols() != model.input_width() {
        return Err(KanError::ShapeMismatch {
            context: "training features",
            expected: model.input_width(),
            got: features.cols(),
        });
    }
    let classes = model.output_width();
    if let Some(row) = labels.iter().position(|&l| l as usize >= classes) {
        return Err(KanError::LabelOutOfRange {
            row,
            label: labels[row],
            classes,
        });
    }

    let mut states: Option<Vec<AdamState>> = None;
    let mut indices: Vec<usize> = (0..rows).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = step_lr(epoch, cfg.learning_rate, cfg.step_size, cfg.gamma);
        let mut rng = SeededRng::new(derive_seed(cfg.rng_seed, epoch as u64));
        rng.shuffle(&mut indices);

        let mut loss_sum = 0.0;
        for chunk in indices.chunks(cfg.batch_size) {
            let batch = features.take_rows(chunk);
            let batch_labels: Vec<u32> = chunk.iter().map(|&i| labels[i]).collect();
            let (loss, grads) = model.loss_and_grads(&batch, &batch_labels)?;
            if !loss.is_finite() {
                return Err(KanError::NonFiniteLoss { epoch });
            }
            loss_sum += loss * chunk.len() as f64;

            let states = states
                .get_or_insert_with(|| grads.iter().map(|g| AdamState::new(g.len())).collect());
            let mut params = model.params_mut();
            for ((param, grad), state) in params.iter_mut().zip(&grads).zip(states.iter_mut()) {
                adam_step(param, grad, state, lr, &cfg.adam);
            }
        }
        let epoch_loss = loss_sum / rows as f64;
        if !epoch_loss.is_finite() {
            return Err(KanError::NonFiniteLoss { epoch });
        }
        trace.push(epoch_loss);
    }
    Ok(trace)
}

/// Same loop with a squared-error objective against real-valued targets;
/// used for function-approximation runs.
pub fn train_regression(
    net: &mut KanNetwork,
    inputs: &Matrix,
    targets: &Matrix,
    cfg: &TrainConfig,
) -> Result<Vec<f64>, KanError> {
    cfg.validate()?;
    let rows = inputs.rows();
    if rows == 0 {
        return Err(KanError::EmptyDataset);
    }
    if targets.rows() != rows {
        return Err(KanError::ShapeMismatch {
            context: "regression targets",
            expected: rows,
            got: targets.rows(),
        });
    }

    let mut states: Option<Vec<AdamState>> = None;
    let mut indices: Vec<usize> = (0..rows).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = step_lr(epoch, cfg.learning_rate, cfg.step_size, cfg.gamma);
        let mut rng = SeededRng::new(derive_seed(cfg.rng_seed, epoch as u64));
        rng.shuffle(&mut indices);

        let mut loss_sum = 0.0;
        for chunk in indices.chunks(cfg.batch_size) {
            let batch = inputs.take_rows(chunk);
            let batch_targets = targets.take_rows(chunk);
            let cache = net.forward_cached(&batch)?;
            let (loss, out_grad) = squared_error(cache.logits(), &batch_targets);
            if !loss.is_finite() {
                return Err(KanError::NonFiniteLoss { epoch });
            }
            loss_sum += loss * chunk.len() as f64;
            let grads = net.backward(&batch, &cache, &out_grad);

            let flat: Vec<&[f64]> = grads.tensors();
            let states = states
                .get_or_insert_with(|| flat.iter().map(|g| AdamState::new(g.len())).collect());
            let mut params = net.params_mut();
            for ((param, grad), state) in params.iter_mut().zip(&flat).zip(states.iter_mut()) {
                adam_step(param, grad, state, lr, &cfg.adam);
            }
        }
        trace.push(loss_sum / rows as f64);
    }
    Ok(trace)
}

/// Writes a loss trace as `epoch,loss` CSV (epochs numbered from 1).
pub fn loss_trace_csv(trace: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (i, loss) in trace.iter().enumerate() {
        out.push_str(&format!("{},{:.17e}\n", i + 1, loss));
    }
    out
}
