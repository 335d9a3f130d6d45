//! The hybrid training procedure, the baselines, and evaluation.

mod compare;
mod hybrid;
mod metrics;

pub use compare::{compare_models, compare_models_with, CompareConfig, Comparison, ModelOutcome};
pub use hybrid::{
    train_hybrid, train_kan_classifier, train_mlp_classifier, GbtSettings, HybridModel,
    HybridTraces, KanClassifier, MlpClassifier, ModelArch,
};
pub use metrics::{confusion_matrix, AveragedMetrics, ClassMetrics, EvalReport, MetricsError};

use crate::boost::BoostError;
use crate::data::DataError;
use crate::kan::KanError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Kan(#[from] KanError),

    #[error(transparent)]
    Boost(#[from] BoostError),

    #[error(transparent)]
    Data(#[from] DataError),

    #[error(transparent)]
    Metrics(#[from] MetricsError),
}
