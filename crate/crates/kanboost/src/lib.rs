// Numeric kernels index several parallel buffers in lockstep; the
// indexed form is clearer there than zipped iterators.
#![allow(clippy::needless_range_loop)]

//! Hybrid intrusion-detection classifier: spline-activation networks
//! (Kolmogorov-Arnold style) feeding second-order gradient-boosted trees,
//! plus the MLP/KAN baselines, dataset construction, and the evaluation
//! harness to compare them.
//!
//! Start with the `examples/` directory: each example is a runnable tour
//! of one capability (spline bases, function fitting, boosted trees, the
//! hybrid pipeline, the three-model comparison). The `kanboost` binary
//! wraps the same pipeline as reproducible `prepare`/`train`/`eval`/
//! `compare` runs.
//!
//! The short version of the whole pipeline:
//!
//! ```
//! use kanboost::data::{stratified_split, synth_generate};
//! use kanboost::pipeline::{train_hybrid, EvalReport, GbtSettings, ModelArch};
//! use kanboost::{SynthProfile, TrainConfig};
//!
//! let data = synth_generate(&SynthProfile {
//!     classes: 3,
//!     width: 12,
//!     per_class: vec![120, 40, 40],
//!     seed: 9,
//! });
//! let (train, test) = stratified_split(&data, 0.2, 1)?;
//!
//! let mut tc = TrainConfig::default_profile(7);
//! tc.epochs = 5;
//! tc.batch_size = 64;
//! tc.learning_rate = 0.01;
//! let gbt = GbtSettings { rounds: 10, max_depth: 3, ..GbtSettings::default() };
//! let (model, _traces) = train_hybrid(&train, &ModelArch::default(), &tc, &gbt)?;
//!
//! let pred = model.predict(&test.features)?;
//! let report = EvalReport::evaluate_named(&pred, &test.labels, data.class_names.clone())?;
//! assert!(report.accuracy > 0.8);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod boost;
pub mod cli;
pub mod data;
pub mod io;
pub mod kan;
pub mod matrix;
pub mod pipeline;
pub mod rng;
pub mod splines;

pub use matrix::Matrix;
pub use splines::{SplineError, SplineGrid};

pub use boost::{GbtModel, GbtParams};
pub use data::{Dataset, SamplingPlan, StandardStats, SynthProfile};
pub use kan::{KanNetwork, MlpNetwork, TrainConfig};
pub use pipeline::{CompareConfig, EvalReport, HybridModel, ModelArch};
