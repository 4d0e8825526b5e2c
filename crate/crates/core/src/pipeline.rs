//! k-SVM: k-means reduction of the training set followed by SVM training
//! on the labeled centroids, with optional refinement rounds.
//!
//! A refinement round re-clusters the training data with a fresh seed and
//! retrains on the new centroids. The centroid set plays the part of the
//! learned dictionary; the returned model is the iterate with the largest
//! dual objective, so refinement never returns anything worse than the
//! plain two-stage result. Centroids are not weighted by their member
//! counts.
//!
//! The model tuple of the method maps onto [`TrainedModel`] as: support
//! vectors and their coefficients, the bias, and the kernel parameters.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::datagen::{Dataset, Label};
use crate::error::{ensure, Result};
use crate::kmeans::{reduce_dataset, ClusterSet, KMeansConfig};
use crate::scalar::Scalar;
use crate::seed;
use crate::svm::{train_smo, TrainParams, TrainedModel};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefineMode {
    #[default]
    ReseedKmeans,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct KsvmConfig<T: Scalar> {
    pub kmeans: KMeansConfig,
    pub svm: TrainParams<T>,
    pub refine_iterations: usize,
    pub refine_mode: RefineMode,
}

impl<T: Scalar> Default for KsvmConfig<T> {
    fn default() -> Self {
        KsvmConfig {
            kmeans: KMeansConfig::default(),
            svm: TrainParams::default(),
            refine_iterations: 0,
            refine_mode: RefineMode::default(),
        }
    }
}

impl<T: Scalar> KsvmConfig<T> {
    pub fn new(clusters_per_class: usize, svm: TrainParams<T>) -> Self {
        KsvmConfig {
            kmeans: KMeansConfig::with_clusters(clusters_per_class),
            svm,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kmeans.validate()?;
        self.svm.validate()?;
        ensure!(
            self.refine_mode != RefineMode::None || self.refine_iterations == 0,
            "refine_mode none is incompatible with {} refinement iterations",
            self.refine_iterations
        );
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KsvmModel<T: Scalar> {
    pub model: TrainedModel<T>,
    pub clusters: ClusterSet<T>,
    /// Dual objective of every iterate; entry 0 is the unrefined model.
    pub per_iteration_objective: Vec<T>,
    pub selected_iteration: usize,
    /// Clustering plus training time of all iterates.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl<T: Scalar> KsvmModel<T> {
    pub fn predict(&self, x: &[T]) -> Result<Label> {
        self.model.predict(x)
    }

    pub fn decision(&self, x: &[T]) -> Result<T> {
        self.model.decision(x)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: KsvmModel<T> = serde_json::from_str(text)?;
        model.model.kernel.validate()?;
        Ok(model)
    }
}

fn train_iterate<T: Scalar>(
    dataset: &Dataset<T>,
    kmeans: &KMeansConfig,
    svm: &TrainParams<T>,
) -> Result<(TrainedModel<T>, ClusterSet<T>)> {
    let clusters = reduce_dataset(dataset, kmeans)?;
    let model = train_smo(&clusters.to_dataset()?, svm)?;
    Ok((model, clusters))
}

pub fn train_ksvm<T: Scalar>(dataset: &Dataset<T>, config: &KsvmConfig<T>) -> Result<KsvmModel<T>> {
    config.validate()?;
    let started = Instant::now();
    let (mut best_model, mut best_clusters) = train_iterate(dataset, &config.kmeans, &config.svm)?;
    let mut trace = vec![best_model.dual_objective];
    let mut selected = 0;

    let rounds = match config.refine_mode {
        RefineMode::ReseedKmeans => config.refine_iterations,
        RefineMode::None => 0,
    };
    for round in 1..=rounds {
        let kmeans = KMeansConfig {
            seed: seed::derive_seed(config.kmeans.seed, &[seed::REFINE, round as u64]),
            ..config.kmeans.clone()
        };
        let (model, clusters) = train_iterate(dataset, &kmeans, &config.svm)?;
        trace.push(model.dual_objective);
        if model.dual_objective > best_model.dual_objective {
            best_model = model;
            best_clusters = clusters;
            selected = round;
        }
    }

    Ok(KsvmModel {
        model: best_model,
        clusters: best_clusters,
        per_iteration_objective: trace,
        selected_iteration: selected,
        wall_time: started.elapsed(),
    })
}

/// Same as `predict` on the embedded SVM; the clusters only shaped training.
pub fn predict_ksvm<T: Scalar>(model: &KsvmModel<T>, x: &[T]) -> Result<Label> {
    model.predict(x)
}
