//! The two-stage hybrid classifier: a spline network trained end-to-end
//! with cross-entropy, then boosted trees fitted on its hidden
//! representation.

use super::PipelineError;
use crate::boost::{argmax_rows, GbtModel, GbtParams};
use crate::data::{standardize, Dataset, StandardStats};
use crate::kan::{train, KanNetwork, MlpNetwork, TrainConfig};
use crate::matrix::Matrix;
use crate::rng::derive_seed;

/// Network shape shared by the classifiers: `[width, hidden, classes]`
/// with the given spline grid for the KAN variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelArch {
    pub hidden: usize,
    pub spline_degree: usize,
    pub grid_intervals: usize,
}

impl Default for ModelArch {
    fn default() -> Self {
        Self {
            hidden: 10,
            spline_degree: 5,
            grid_intervals: 7,
        }
    }
}

/// Stream label separating network initialization from epoch shuffles
/// when both derive from the one configured training seed.
const INIT_STREAM: u64 = 0x4b41_4e5f_494e_4954;

pub(crate) fn init_seed(train_seed: u64) -> u64 {
    derive_seed(train_seed, INIT_STREAM)
}

/// Boosting settings without the class count (which comes from the data).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtSettings {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub base_score: f64,
}

impl Default for GbtSettings {
    fn default() -> Self {
        let p = GbtParams::default_profile(1);
        Self {
            rounds: p.rounds,
            learning_rate: p.learning_rate,
            max_depth: p.max_depth,
            lambda: p.lambda,
            gamma: p.gamma,
            min_child_weight: p.min_child_weight,
            base_score: p.base_score,
        }
    }
}

impl GbtSettings {
    pub fn with_classes(&self, n_classes: usize) -> GbtParams {
        GbtParams {
            rounds: self.rounds,
            learning_rate: self.learning_rate,
            max_depth: self.max_depth,
            lambda: self.lambda,
            gamma: self.gamma,
            min_child_weight: self.min_child_weight,
            base_score: self.base_score,
            n_classes,
        }
    }
}

/// Spline network classifier with its training-set standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct KanClassifier {
    pub stats: StandardStats,
    pub net: KanNetwork,
}

impl KanClassifier {
    pub fn predict(&self, features: &Matrix) -> Result<Vec<u32>, PipelineError> {
        let z = self.stats.apply(features);
        Ok(argmax_rows(&self.net.forward(&z)?))
    }
}

/// Dense baseline classifier with its training-set standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    pub stats: StandardStats,
    pub net: MlpNetwork,
}

impl MlpClassifier {
    pub fn predict(&self, features: &Matrix) -> Result<Vec<u32>, PipelineError> {
        let z = self.stats.apply(features);
        Ok(argmax_rows(&self.net.forward(&z)?))
    }
}

/// The hybrid: network feature extractor plus boosted trees over its
/// hidden activations.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    pub stats: StandardStats,
    pub kan: KanNetwork,
    pub gbt: GbtModel,
}

impl HybridModel {
    pub fn predict(&self, features: &Matrix) -> Result<Vec<u32>, PipelineError> {
        let z = self.stats.apply(features);
        let hidden = self.kan.hidden(&z)?;
        let (_, classes) = self.gbt.predict(&hidden)?;
        Ok(classes)
    }

    /// Hidden-representation width the tree stage consumes.
    pub fn representation_width(&self) -> usize {
        self.gbt.n_features()
    }
}

/// Per-epoch network loss and per-round boosting loss of one hybrid fit.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridTraces {
    pub kan_epochs: Vec<f64>,
    pub gbt_rounds: Vec<f64>,
}

/// Trains the full hybrid on an (already split) training set.
///
/// Stage 1 standardizes the features and trains the network end-to-end
/// with cross-entropy; stage 2 extracts hidden activations for every
/// training row; stage 3 fits the boosted trees on those activations.
/// Deterministic given the training seed.
pub fn train_hybrid(
    train_set: &Dataset,
    arch: &ModelArch,
    tc: &TrainConfig,
    gbt: &GbtSettings,
) -> Result<(HybridModel, HybridTraces), PipelineError> {
    let n_classes = train_set.n_classes();
    let (z, stats) = standardize(&train_set.features);
    let widths = [train_set.width(), arch.hidden, n_classes];
    let mut net = KanNetwork::new(
        &widths,
        arch.spline_degree,
        arch.grid_intervals,
        init_seed(tc.rng_seed),
    )?;
    let kan_epochs = train(&mut net, &z, &train_set.labels, tc)?;

    let hidden = net.hidden(&z)?;
    let model = GbtModel::fit(&hidden, &train_set.labels, gbt.with_classes(n_classes))?;
    let gbt_rounds = model.training_loss().to_vec();

    Ok((
        HybridModel {
            stats,
            kan: net,
            gbt: model,
        },
        HybridTraces {
            kan_epochs,
            gbt_rounds,
        },
    ))
}

/// Trains the network-only classifier under the same conventions.
pub fn train_kan_classifier(
    train_set: &Dataset,
    arch: &ModelArch,
    tc: &TrainConfig,
) -> Result<(KanClassifier, Vec<f64>), PipelineError> {
    let (z, stats) = standardize(&train_set.features);
    let widths = [train_set.width(), arch.hidden, train_set.n_classes()];
    let mut net = KanNetwork::new(
        &widths,
        arch.spline_degree,
        arch.grid_intervals,
        init_seed(tc.rng_seed),
    )?;
    let trace = train(&mut net, &z, &train_set.labels, tc)?;
    Ok((KanClassifier { stats, net }, trace))
}

/// Trains the dense baseline under the same conventions.
pub fn train_mlp_classifier(
    train_set: &Dataset,
    arch: &ModelArch,
    tc: &TrainConfig,
) -> Result<(MlpClassifier, Vec<f64>), PipelineError> {
    let (z, stats) = standardize(&train_set.features);
    let widths = [train_set.width(), arch.hidden, train_set.n_classes()];
    let mut net = MlpNetwork::new(&widths, init_seed(tc.rng_seed))?;
    let trace = train(&mut net, &z, &train_set.labels, tc)?;
    Ok((MlpClassifier { stats, net }, trace))
}
