//! Second-order gradient-boosted regression trees with a softmax
//! multiclass objective.
//!
//! Each boosting round fits one tree per class to the per-row gradient
//! and hessian of the softmax cross-entropy at the current logits, then
//! adds the learning-rate-scaled tree outputs to those logits. Split
//! search is exact greedy (all features, all midpoints between distinct
//! sorted values), and leaf weights are the regularized Newton step
//! `-G / (H + lambda)`.

mod tree;

pub use tree::{best_split, build_tree, leaf_weight, SplitChoice, TreeNode, TreeParams};

use crate::io::{FormatError, Reader, Writer};
use crate::matrix::Matrix;
use thiserror::Error;

const MAGIC: &[u8; 8] = b"GBTMODEL";
const FORMAT_VERSION: u32 = 1;
/// Hessian floor keeping leaf weights finite on saturated predictions.
const HESSIAN_FLOOR: f64 = 1e-16;
/// Recursion guard when deserializing trees from untrusted bytes.
const MAX_DECODE_DEPTH: usize = 512;

#[derive(Debug, Error)]
pub enum BoostError {
    #[error("label {label} out of range for {classes} classes (row {row})")]
    LabelOutOfRange {
        row: usize,
        label: u32,
        classes: usize,
    },

    #[error("feature width mismatch: model expects {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Boosting hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtParams {
    /// Boosting rounds (trees per class).
    pub rounds: usize,
    /// Shrinkage applied to every tree's output.
    pub learning_rate: f64,
    pub max_depth: usize,
    /// L2 regularization on leaf weights.
    pub lambda: f64,
    /// Minimum split gain.
    pub gamma: f64,
    pub min_child_weight: f64,
    /// Initial logit for every class.
    pub base_score: f64,
    pub n_classes: usize,
}

impl GbtParams {
    /// The shipped default profile: 100 rounds, learning rate 0.1,
    /// depth 6, and the usual regularization defaults.
    pub fn default_profile(n_classes: usize) -> Self {
        Self {
            rounds: 100,
            learning_rate: 0.1,
            max_depth: 6,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            base_score: 0.0,
            n_classes,
        }
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            lambda: self.lambda,
            gamma: self.gamma,
            min_child_weight: self.min_child_weight,
        }
    }

    fn validate(&self) -> Result<(), BoostError> {
        if self.n_classes == 0 {
            return Err(BoostError::InvalidParams(
                "n_classes must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(BoostError::InvalidParams(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.lambda < 0.0 || self.gamma < 0.0 || self.min_child_weight < 0.0 {
            return Err(BoostError::InvalidParams(
                "lambda, gamma, and min_child_weight must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Per-row, per-class gradient and hessian of the softmax cross-entropy.
///
/// `g = p - onehot(label)`, `h = p (1 - p)` floored at `1e-16`.
pub fn softmax_grad_hess(logits: &Matrix, labels: &[u32]) -> Result<(Matrix, Matrix), BoostError> {
    let rows = logits.rows();
    let classes = logits.cols();
    assert_eq!(labels.len(), rows, "label count mismatch");
    let mut g = Matrix::zeros(rows, classes);
    let mut h = Matrix::zeros(rows, classes);
    for r in 0..rows {
        let label = labels[r];
        if label as usize >= classes {
            return Err(BoostError::LabelOutOfRange {
                row: r,
                label,
                classes,
            });
        }
        let row = logits.row(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&l| (l - max).exp()).sum();
        let gr = g.row_mut(r);
        let hr = h.row_mut(r);
        for c in 0..classes {
            let p = (row[c] - max).exp() / sum;
            gr[c] = p - if c == label as usize { 1.0 } else { 0.0 };
            hr[c] = (p * (1.0 - p)).max(HESSIAN_FLOOR);
        }
    }
    Ok((g, h))
}

fn mean_softmax_loss(logits: &Matrix, labels: &[u32]) -> f64 {
    let mut total = 0.0;
    for r in 0..logits.rows() {
        let row = logits.row(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&l| (l - max).exp()).sum();
        total += max + sum.ln() - row[labels[r] as usize];
    }
    total / logits.rows() as f64
}

/// An additive ensemble of `rounds x n_classes` regression trees.
#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    params: GbtParams,
    n_features: usize,
    /// `trees[round][class]`.
    trees: Vec<Vec<TreeNode>>,
    /// Mean training softmax loss before boosting and after each round.
    /// Not part of the serialized model.
    training_loss: Vec<f64>,
}

impl GbtModel {
    /// Fits the ensemble. Deterministic: identical inputs produce an
    /// identical model.
    pub fn fit(features: &Matrix, labels: &[u32], params: GbtParams) -> Result<Self, BoostError> {
        params.validate()?;
        let rows = features.rows();
        if rows == 0 {
            return Err(BoostError::EmptyDataset);
        }
        assert_eq!(labels.len(), rows, "label count mismatch");
        let classes = params.n_classes;
        if let Some(row) = labels.iter().position(|&l| l as usize >= classes) {
            return Err(BoostError::LabelOutOfRange {
                row,
                label: labels[row],
                classes,
            });
        }

        let tree_params = params.tree_params();
        let all_rows: Vec<usize> = (0..rows).collect();
        let mut logits = Matrix::zeros(rows, classes);
        logits.as_mut_slice().fill(params.base_score);

        let mut training_loss = Vec::with_capacity(params.rounds + 1);
        training_loss.push(mean_softmax_loss(&logits, labels));

        let mut trees = Vec::with_capacity(params.rounds);
        let mut g_col = vec![0.0; rows];
        let mut h_col = vec![0.0; rows];
        for _round in 0..params.rounds {
            let (g, h) = softmax_grad_hess(&logits, labels)?;
            let mut round_trees = Vec::with_capacity(classes);
            for c in 0..classes {
                for r in 0..rows {
                    g_col[r] = g.get(r, c);
                    h_col[r] = h.get(r, c);
                }
                let tree = build_tree(&all_rows, features, &g_col, &h_col, &tree_params);
                for r in 0..rows {
                    let v = logits.get(r, c) + params.learning_rate * tree.eval(features.row(r));
                    logits.set(r, c, v);
                }
                round_trees.push(tree);
            }
            trees.push(round_trees);
            training_loss.push(mean_softmax_loss(&logits, labels));
        }

        Ok(Self {
            params,
            n_features: features.cols(),
            trees,
            training_loss,
        })
    }

    pub fn params(&self) -> &GbtParams {
        &self.params
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.params.n_classes
    }

    pub fn trees(&self) -> &[Vec<TreeNode>] {
        &self.trees
    }

    /// Mean training softmax loss trace: entry 0 is the pre-boosting
    /// loss, entry `r` the loss after round `r`.
    pub fn training_loss(&self) -> &[f64] {
        &self.training_loss
    }

    /// Raw ensemble logits: `base_score + lr * sum of tree outputs`.
    pub fn predict_logits(&self, features: &Matrix) -> Result<Matrix, BoostError> {
        if features.cols() != self.n_features {
            return Err(BoostError::WidthMismatch {
                expected: self.n_features,
                got: features.cols(),
            });
        }
        let classes = self.params.n_classes;
        let mut logits = Matrix::zeros(features.rows(), classes);
        logits.as_mut_slice().fill(self.params.base_score);
        for r in 0..features.rows() {
            let x = features.row(r);
            let out = logits.row_mut(r);
            for round in &self.trees {
                for (c, tree) in round.iter().enumerate() {
                    out[c] += self.params.learning_rate * tree.eval(x);
                }
            }
        }
        Ok(logits)
    }

    /// Logits plus argmax class ids (ties to the lowest class id).
    pub fn predict(&self, features: &Matrix) -> Result<(Matrix, Vec<u32>), BoostError> {
        let logits = self.predict_logits(features)?;
        let classes = argmax_rows(&logits);
        Ok((logits, classes))
    }

    /// Serializes as a versioned flat file: parameter header, then the
    /// trees in preorder.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(MAGIC, FORMAT_VERSION);
        w.u32(self.trees.len() as u32);
        w.u32(self.params.n_classes as u32);
        w.u32(self.n_features as u32);
        w.u32(self.params.max_depth as u32);
        w.u32(self.params.rounds as u32);
        w.f64(self.params.learning_rate);
        w.f64(self.params.lambda);
        w.f64(self.params.gamma);
        w.f64(self.params.min_child_weight);
        w.f64(self.params.base_score);
        for round in &self.trees {
            for tree in round {
                write_tree(&mut w, tree);
            }
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut r = Reader::new(bytes, MAGIC, FORMAT_VERSION)?;
        let stored_rounds = r.u32()? as usize;
        let n_classes = r.u32()? as usize;
        let n_features = r.u32()? as usize;
        let max_depth = r.u32()? as usize;
        let rounds = r.u32()? as usize;
        let learning_rate = r.f64()?;
        let lambda = r.f64()?;
        let gamma = r.f64()?;
        let min_child_weight = r.f64()?;
        let base_score = r.f64()?;
        if n_classes == 0 {
            return Err(FormatError::Corrupt("zero classes".into()));
        }
        let mut trees = Vec::with_capacity(stored_rounds);
        for _ in 0..stored_rounds {
            let mut round = Vec::with_capacity(n_classes);
            for _ in 0..n_classes {
                round.push(read_tree(&mut r, 0)?);
            }
            trees.push(round);
        }
        r.expect_end()?;
        Ok(Self {
            params: GbtParams {
                rounds,
                learning_rate,
                max_depth,
                lambda,
                gamma,
                min_child_weight,
                base_score,
                n_classes,
            },
            n_features,
            trees,
            training_loss: Vec::new(),
        })
    }
}

/// Argmax per row with ties to the lowest index.
pub fn argmax_rows(logits: &Matrix) -> Vec<u32> {
    logits
        .iter_rows()
        .map(|row| {
            let mut best = 0usize;
            for (c, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = c;
                }
            }
            best as u32
        })
        .collect()
}

fn write_tree(w: &mut Writer, node: &TreeNode) {
    match node {
        TreeNode::Leaf { weight } => {
            w.u8(0);
            w.f64(*weight);
        }
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            w.u8(1);
            w.u32(*feature as u32);
            w.f64(*threshold);
            write_tree(w, left);
            write_tree(w, right);
        }
    }
}

fn read_tree(r: &mut Reader<'_>, depth: usize) -> Result<TreeNode, FormatError> {
    if depth > MAX_DECODE_DEPTH {
        return Err(FormatError::Corrupt("tree nesting too deep".into()));
    }
    match r.u8()? {
        0 => Ok(TreeNode::Leaf { weight: r.f64()? }),
        1 => {
            let feature = r.u32()? as usize;
            let threshold = r.f64()?;
            let left = Box::new(read_tree(r, depth + 1)?);
            let right = Box::new(read_tree(r, depth + 1)?);
            Ok(TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            })
        }
        tag => Err(FormatError::Corrupt(format!("unknown node tag {tag}"))),
    }
}
