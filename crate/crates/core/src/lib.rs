//! k-SVM: soft-margin Gaussian-kernel SVM classification of flying and
//! mobile robot cohorts, with per-class k-means reduction of the training
//! set, cross-validated grid search, and an SVM versus k-SVM benchmark
//! harness over synthetic scenarios.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, with `*32` variants for `f32`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod datagen;
pub mod error;
pub mod evaluation;
pub mod kmeans;
pub mod pipeline;
pub mod scalar;
pub mod seed;
pub mod svm;

pub use datagen::{Label, NoiseDistribution, ScenarioSpec, TaskGeometry};
pub use error::{KsvmError, Result};
pub use evaluation::{Classifier, ConfusionCounts, CvReport, Method};
pub use kmeans::{KMeansConfig, KMeansInit};
pub use pipeline::RefineMode;
pub use scalar::Scalar;
pub use svm::KernelFamily;

pub type Dataset = datagen::Dataset<f64>;
pub type LabeledPoint = datagen::LabeledPoint<f64>;
pub type ClusterSet = kmeans::ClusterSet<f64>;
pub type KernelSpec = svm::KernelSpec<f64>;
pub type TrainParams = svm::TrainParams<f64>;
pub type TrainedModel = svm::TrainedModel<f64>;
pub type KsvmConfig = pipeline::KsvmConfig<f64>;
pub type KsvmModel = pipeline::KsvmModel<f64>;

pub type Dataset32 = datagen::Dataset<f32>;
pub type TrainParams32 = svm::TrainParams<f32>;
pub type TrainedModel32 = svm::TrainedModel<f32>;
pub type KsvmConfig32 = pipeline::KsvmConfig<f32>;
pub type KsvmModel32 = pipeline::KsvmModel<f32>;
