//! Classify which visual task an observer performed from eye-tracking
//! samples.
//!
//! The crate covers the whole path from raw gaze CSVs to a trial-level
//! confusion matrix: [`gaze_data`] ingestion and splitting, [`preprocess`]
//! blink removal and z-scoring, [`context_map`] exploratory projections,
//! one-vs-rest [`svm`] classifiers trained by SMO, [`boosting`] with CART
//! trees, and [`eval`] reports. [`synth`] generates seeded recordings for
//! testing, and [`pipeline`] strings the stages together.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boosting;
pub mod context_map;
pub mod error;
pub mod eval;
pub mod gaze_data;
pub mod matrix;
pub mod model_file;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};
pub use gaze_data::{Dataset, Field, GazeSample, LabelSet, TaskLabel, Trial};
pub use matrix::Matrix;
pub use model_file::{ModelFile, ModelPayload};
pub use pipeline::RunConfig;
