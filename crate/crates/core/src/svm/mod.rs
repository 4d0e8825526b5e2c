//! Soft-margin kernel SVM trained by sequential minimal optimization.
//!
//! The feature map is never materialized: a trained model is its support
//! vectors, their dual coefficients and a bias, and the decision value is
//! `f(x) = sum_i coef_i y_i k(x_i, x) + b`. Slack only appears as the upper
//! bound `M` on the coefficients.

mod kernel;
mod smo;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::datagen::{Dataset, Label};
use crate::error::{ensure, KsvmError, Result};
use crate::scalar::Scalar;

pub use kernel::{gram_matrix, kernel_eval, Gram, KernelFamily, KernelSpec};
pub use smo::DualSolution;

/// Penalty the grid search of the original experiments settled on (2^7).
pub const DEFAULT_PENALTY_EXP: i32 = 7;
/// Kernel width the grid search settled on (2^-9).
pub const DEFAULT_ALPHA_EXP: i32 = -9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default)]
pub struct TrainParams<T: Scalar> {
    /// `M`, the price of slack.
    pub penalty: T,
    pub kernel: KernelSpec<T>,
    pub kkt_tolerance: T,
    /// The solver may run `max_passes * n` outer sweeps before giving up.
    pub max_passes: usize,
    /// Support-vector pruning threshold and balance tolerance.
    pub numeric_epsilon: T,
    /// Training sets up to this size get a precomputed Gram matrix.
    pub gram_cache_limit: usize,
}

impl<T: Scalar> Default for TrainParams<T> {
    fn default() -> Self {
        TrainParams {
            penalty: T::pow2(DEFAULT_PENALTY_EXP),
            kernel: KernelSpec::gaussian(T::pow2(DEFAULT_ALPHA_EXP)),
            kkt_tolerance: T::lit(1e-3),
            max_passes: 10,
            numeric_epsilon: T::lit(1e-12).max(T::epsilon() * T::lit(16.0)),
            gram_cache_limit: 2500,
        }
    }
}

impl<T: Scalar> TrainParams<T> {
    pub fn new(penalty: T, alpha: T) -> Self {
        TrainParams {
            penalty,
            kernel: KernelSpec::gaussian(alpha),
            ..Default::default()
        }
    }

    pub fn with_tolerance(mut self, kkt_tolerance: T) -> Self {
        self.kkt_tolerance = kkt_tolerance;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.penalty.is_finite() && self.penalty > T::zero(),
            "penalty M must be positive and finite, got {}",
            self.penalty
        );
        self.kernel.validate()?;
        ensure!(self.kkt_tolerance > T::zero(), "kkt_tolerance must be positive");
        ensure!(self.numeric_epsilon > T::zero(), "numeric_epsilon must be positive");
        ensure!(self.max_passes >= 1, "max_passes must be at least 1");
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SupportVector<T: Scalar> {
    pub x: Vec<T>,
    pub y: Label,
    /// Dual coefficient, in `(0, M]`.
    pub coef: T,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingStats {
    pub n_input: usize,
    pub n_support: usize,
    pub converged: bool,
    pub iterations: usize,
    pub sweeps: usize,
    /// Not serialized, so model files stay byte-stable across runs.
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrainedModel<T: Scalar> {
    pub kernel: KernelSpec<T>,
    pub penalty: T,
    pub bias: T,
    pub dimension: usize,
    pub support_vectors: Vec<SupportVector<T>>,
    pub dual_objective: T,
    pub stats: TrainingStats,
}

impl<T: Scalar> TrainedModel<T> {
    pub fn n_support(&self) -> usize {
        self.support_vectors.len()
    }

    fn check_dimension(&self, x: &[T]) -> Result<()> {
        ensure!(
            x.len() == self.dimension,
            "input has dimension {}, model expects {}",
            x.len(),
            self.dimension
        );
        Ok(())
    }

    /// Decision value without the dimension check.
    pub fn decision_value(&self, x: &[T]) -> T {
        self.support_vectors.iter().fold(self.bias, |acc, sv| {
            acc + sv.coef * sv.y.sign::<T>() * self.kernel.eval(&sv.x, x)
        })
    }

    pub fn decision(&self, x: &[T]) -> Result<T> {
        self.check_dimension(x)?;
        Ok(self.decision_value(x))
    }

    pub fn predict(&self, x: &[T]) -> Result<Label> {
        self.decision(x).map(Label::from_decision)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrainedModel<T> = serde_json::from_str(text)?;
        ensure!(
            model.support_vectors.iter().all(|sv| sv.x.len() == model.dimension),
            "support vector dimensions disagree with the model dimension"
        );
        model.kernel.validate()?;
        Ok(model)
    }
}

pub fn decision<T: Scalar>(model: &TrainedModel<T>, x: &[T]) -> Result<T> {
    model.decision(x)
}

/// Sign of the decision value; an exact zero maps to `Mobile` (+1).
pub fn predict<T: Scalar>(model: &TrainedModel<T>, x: &[T]) -> Result<Label> {
    model.predict(x)
}

fn check_training_set<T: Scalar>(dataset: &Dataset<T>, params: &TrainParams<T>) -> Result<()> {
    params.validate()?;
    ensure!(dataset.len() >= 2, "training needs at least two points");
    dataset.require_both_labels()
}

/// Solves the dual and returns every multiplier, including the zeros that a
/// [`TrainedModel`] drops.
pub fn solve_dual<T: Scalar>(dataset: &Dataset<T>, params: &TrainParams<T>) -> Result<DualSolution<T>> {
    check_training_set(dataset, params)?;
    let settings = smo::SolverSettings {
        penalty: params.penalty,
        tolerance: params.kkt_tolerance,
        epsilon: params.numeric_epsilon,
        max_sweeps: params.max_passes.saturating_mul(dataset.len()),
        cache_limit: params.gram_cache_limit,
    };
    Ok(smo::solve(dataset, &params.kernel, &settings))
}

/// Trains a soft-margin SVM. A run that exhausts its budget still returns
/// the last iterate, with `stats.converged == false`.
pub fn train_smo<T: Scalar>(dataset: &Dataset<T>, params: &TrainParams<T>) -> Result<TrainedModel<T>> {
    let started = Instant::now();
    let solution = solve_dual(dataset, params)?;
    let support_vectors: Vec<SupportVector<T>> = dataset
        .iter()
        .zip(&solution.alphas)
        .filter(|(_, &a)| a > params.numeric_epsilon)
        .map(|(p, &a)| SupportVector {
            x: p.features.clone(),
            y: p.label,
            coef: a,
        })
        .collect();
    if support_vectors.is_empty() {
        return Err(KsvmError::Internal("dual solution has no support vectors".into()));
    }
    Ok(TrainedModel {
        kernel: params.kernel,
        penalty: params.penalty,
        bias: solution.bias,
        dimension: dataset.dimension(),
        stats: TrainingStats {
            n_input: dataset.len(),
            n_support: support_vectors.len(),
            converged: solution.converged,
            iterations: solution.iterations,
            sweeps: solution.sweeps,
            wall_time: started.elapsed(),
        },
        support_vectors,
        dual_objective: solution.dual_objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::LabeledPoint;

    fn pair(a: Vec<f64>, b: Vec<f64>) -> Dataset<f64> {
        Dataset::from_points(vec![
            LabeledPoint::new(a, Label::Mobile),
            LabeledPoint::new(b, Label::Flying),
        ])
        .unwrap()
    }

    #[test]
    fn two_points_bisector() {
        for (penalty, alpha) in [(1.0, 0.5), (128.0, 2.0), (0.01, 1.0)] {
            let d = pair(vec![1.0, 2.0], vec![-0.5, 0.0]);
            let m = train_smo(&d, &TrainParams::new(penalty, alpha)).unwrap();
            assert_eq!(m.n_support(), 2);
            let (a, b) = (m.support_vectors[0].coef, m.support_vectors[1].coef);
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            let mid = [0.25, 1.0];
            assert!(m.decision(&mid).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let d = Dataset::from_points(vec![
            LabeledPoint::new(vec![0.0], Label::Mobile),
            LabeledPoint::new(vec![1.0], Label::Mobile),
        ])
        .unwrap();
        assert!(train_smo(&d, &TrainParams::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn far_away_decision_is_bias() {
        let d = pair(vec![1.0, 0.0], vec![0.0, 1.0]);
        let m = train_smo(&d, &TrainParams::new(1.0, 1.0)).unwrap();
        let v = m.decision(&[1e6, -1e6]).unwrap();
        assert!((v - m.bias).abs() < 1e-9);
    }

    #[test]
    fn dimension_checked() {
        let d = pair(vec![1.0, 0.0], vec![0.0, 1.0]);
        let m = train_smo(&d, &TrainParams::new(1.0, 1.0)).unwrap();
        assert!(m.decision(&[0.0]).is_err());
        assert!(m.predict(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn zero_decision_predicts_mobile() {
        let m = TrainedModel {
            kernel: KernelSpec::gaussian(1.0),
            penalty: 1.0,
            bias: 0.0,
            dimension: 1,
            support_vectors: vec![],
            dual_objective: 0.0,
            stats: TrainingStats::default(),
        };
        assert_eq!(m.predict(&[3.0]).unwrap(), Label::Mobile);
    }

    #[test]
    fn rejects_bad_params() {
        let d = pair(vec![1.0], vec![0.0]);
        assert!(train_smo(&d, &TrainParams::new(0.0, 1.0)).is_err());
        assert!(train_smo(&d, &TrainParams::new(1.0, -1.0)).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let d = pair(vec![0.1, 0.7], vec![-0.3, 0.2]);
        let m = train_smo(&d, &TrainParams::new(3.0, 0.9)).unwrap();
        let back = TrainedModel::<f64>::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.support_vectors, m.support_vectors);
        assert_eq!(back.bias, m.bias);
        assert_eq!(back.decision(&[0.4, 0.4]).unwrap(), m.decision(&[0.4, 0.4]).unwrap());
    }

    #[test]
    fn f32_training() {
        let d: Dataset<f32> = pair(vec![1.0, 2.0], vec![-0.5, 0.0]).cast();
        let m = train_smo(&d, &TrainParams::new(1.0f32, 0.5)).unwrap();
        assert_eq!(m.predict(&[1.0, 2.0]).unwrap(), Label::Mobile);
        assert_eq!(m.predict(&[-0.5, 0.0]).unwrap(), Label::Flying);
    }
}
