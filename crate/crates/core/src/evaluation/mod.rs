//! Per-class accuracies, cross-validation, exponential grid search over
//! `(M, alpha)`, and windowed classification error.

mod grid;
mod window;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{split_folds, Dataset, Label};
use crate::error::{ensure, KsvmError, Result};
use crate::pipeline::{train_ksvm, KsvmConfig, KsvmModel};
use crate::scalar::Scalar;
use crate::svm::{train_smo, TrainParams, TrainedModel};

pub use grid::{grid_search, ExpRange, GridCell, GridResult, GridSearchConfig};
pub use window::{assign_timestamps, windowed_error, TimedPoint, WindowError, WindowedErrorSpec};

/// Anything that maps a feature vector to a class.
pub trait Classifier<T: Scalar>: Sync {
    fn dimension(&self) -> usize;
    fn classify(&self, x: &[T]) -> Result<Label>;
}

/// A classifier with a real-valued decision function.
pub trait DecisionFunction<T: Scalar>: Classifier<T> {
    fn decision_value(&self, x: &[T]) -> Result<T>;
}

impl<T: Scalar> Classifier<T> for TrainedModel<T> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn classify(&self, x: &[T]) -> Result<Label> {
        self.predict(x)
    }
}

impl<T: Scalar> DecisionFunction<T> for TrainedModel<T> {
    fn decision_value(&self, x: &[T]) -> Result<T> {
        self.decision(x)
    }
}

impl<T: Scalar> Classifier<T> for KsvmModel<T> {
    fn dimension(&self) -> usize {
        self.model.dimension
    }

    fn classify(&self, x: &[T]) -> Result<Label> {
        self.predict(x)
    }
}

impl<T: Scalar> DecisionFunction<T> for KsvmModel<T> {
    fn decision_value(&self, x: &[T]) -> Result<T> {
        self.decision(x)
    }
}

/// Training recipe: plain SVM on the full set, or k-SVM.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", rename_all = "lowercase", tag = "method")]
pub enum Method<T: Scalar> {
    Svm(TrainParams<T>),
    Ksvm(KsvmConfig<T>),
}

impl<T: Scalar> Method<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Svm(_) => "svm",
            Method::Ksvm(_) => "ksvm",
        }
    }

    pub fn svm_params(&self) -> &TrainParams<T> {
        match self {
            Method::Svm(p) => p,
            Method::Ksvm(c) => &c.svm,
        }
    }

    /// The same recipe with penalty and kernel width replaced.
    pub fn with_hyperparameters(&self, penalty: T, alpha: T) -> Method<T> {
        let mut m = self.clone();
        let params = match &mut m {
            Method::Svm(p) => p,
            Method::Ksvm(c) => &mut c.svm,
        };
        params.penalty = penalty;
        params.kernel.alpha = alpha;
        m
    }

    pub fn fit(&self, dataset: &Dataset<T>) -> Result<FittedModel<T>> {
        match self {
            Method::Svm(p) => train_smo(dataset, p).map(FittedModel::Svm),
            Method::Ksvm(c) => train_ksvm(dataset, c).map(FittedModel::Ksvm),
        }
    }
}

/// Output of [`Method::fit`]. Deserializes from either model document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", untagged)]
pub enum FittedModel<T: Scalar> {
    Ksvm(KsvmModel<T>),
    Svm(TrainedModel<T>),
}

impl<T: Scalar> FittedModel<T> {
    pub fn svm(&self) -> &TrainedModel<T> {
        match self {
            FittedModel::Svm(m) => m,
            FittedModel::Ksvm(m) => &m.model,
        }
    }

    pub fn n_support(&self) -> usize {
        self.svm().n_support()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: FittedModel<T> = serde_json::from_str(text)?;
        m.svm().kernel.validate()?;
        Ok(m)
    }
}

impl<T: Scalar> Classifier<T> for FittedModel<T> {
    fn dimension(&self) -> usize {
        self.svm().dimension
    }

    fn classify(&self, x: &[T]) -> Result<Label> {
        self.svm().predict(x)
    }
}

impl<T: Scalar> DecisionFunction<T> for FittedModel<T> {
    fn decision_value(&self, x: &[T]) -> Result<T> {
        self.svm().decision(x)
    }
}

/// Correct and total counts per class on an evaluated set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub flying_correct: usize,
    pub flying_total: usize,
    pub mobile_correct: usize,
    pub mobile_total: usize,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionCounts {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        let hit = usize::from(truth == predicted);
        match truth {
            Label::Flying => {
                self.flying_total += 1;
                self.flying_correct += hit;
            }
            Label::Mobile => {
                self.mobile_total += 1;
                self.mobile_correct += hit;
            }
        }
    }

    pub fn correct(&self) -> usize {
        self.flying_correct + self.mobile_correct
    }

    pub fn total(&self) -> usize {
        self.flying_total + self.mobile_total
    }

    /// Fraction of flying robots classified as flying.
    pub fn accuracy_flying(&self) -> Option<f64> {
        ratio(self.flying_correct, self.flying_total)
    }

    /// Fraction of mobile robots classified as mobile.
    pub fn accuracy_mobile(&self) -> Option<f64> {
        ratio(self.mobile_correct, self.mobile_total)
    }

    pub fn error(&self) -> Option<f64> {
        ratio(self.total() - self.correct(), self.total())
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            flying_correct: self.flying_correct + o.flying_correct,
            flying_total: self.flying_total + o.flying_total,
            mobile_correct: self.mobile_correct + o.mobile_correct,
            mobile_total: self.mobile_total + o.mobile_total,
        }
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = ConfusionCounts>>(iter: I) -> Self {
        iter.fold(ConfusionCounts::default(), |a, b| a + b)
    }
}

pub fn evaluate<T: Scalar, C: Classifier<T> + ?Sized>(model: &C, test: &Dataset<T>) -> Result<ConfusionCounts> {
    ensure!(!test.is_empty(), "evaluation set is empty");
    ensure!(
        test.dimension() == model.dimension(),
        "evaluation set has dimension {}, model expects {}",
        test.dimension(),
        model.dimension()
    );
    let mut counts = ConfusionCounts::default();
    for p in test {
        counts.record(p.label, model.classify(&p.features)?);
    }
    Ok(counts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub fold_count: usize,
    pub per_fold: Vec<ConfusionCounts>,
    pub accuracy_flying: f64,
    pub accuracy_mobile: f64,
    pub overall_error: f64,
    pub mean_train_seconds: f64,
}

impl CvReport {
    /// Aggregates fold counts: accuracies pool the counts of all folds.
    pub fn from_folds(per_fold: Vec<ConfusionCounts>, train_seconds: &[f64]) -> CvReport {
        let total: ConfusionCounts = per_fold.iter().copied().sum();
        let mean_train_seconds = if train_seconds.is_empty() {
            0.0
        } else {
            train_seconds.iter().sum::<f64>() / train_seconds.len() as f64
        };
        CvReport {
            fold_count: per_fold.len(),
            accuracy_flying: total.accuracy_flying().unwrap_or(0.0),
            accuracy_mobile: total.accuracy_mobile().unwrap_or(0.0),
            overall_error: total.error().unwrap_or(0.0),
            mean_train_seconds,
            per_fold,
        }
    }

    pub fn totals(&self) -> ConfusionCounts {
        self.per_fold.iter().copied().sum()
    }

    /// Flat CSV, one row per fold.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,flying_correct,flying_total,mobile_correct,mobile_total\n");
        for (i, c) in self.per_fold.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{},{},{}\n",
                c.flying_correct, c.flying_total, c.mobile_correct, c.mobile_total
            ));
        }
        out
    }
}

/// Stratified `folds`-fold cross-validation. Folds are trained in parallel
/// and aggregated in fold order.
pub fn cross_validate<T: Scalar>(
    dataset: &Dataset<T>,
    method: &Method<T>,
    folds: usize,
    seed: u64,
) -> Result<CvReport> {
    ensure!(folds >= 2, "cross-validation needs at least 2 folds, got {folds}");
    dataset.require_both_labels()?;
    let splits = split_folds(dataset, folds, seed)?;
    let results: Vec<(ConfusionCounts, f64)> = splits
        .par_iter()
        .enumerate()
        .map(|(i, fold)| {
            if fold.train.require_both_labels().is_err() {
                return Err(KsvmError::Internal(format!(
                    "training set of fold {i} holds a single class"
                )));
            }
            let started = Instant::now();
            let model = method.fit(&fold.train)?;
            let seconds = started.elapsed().as_secs_f64();
            Ok((evaluate(&model, &fold.validate)?, seconds))
        })
        .collect::<Result<_>>()?;
    let (counts, seconds): (Vec<ConfusionCounts>, Vec<f64>) = results.into_iter().unzip();
    Ok(CvReport::from_folds(counts, &seconds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::LabeledPoint;

    struct Constant(Label);

    impl Classifier<f64> for Constant {
        fn dimension(&self) -> usize {
            1
        }

        fn classify(&self, _: &[f64]) -> Result<Label> {
            Ok(self.0)
        }
    }

    struct Threshold;

    impl Classifier<f64> for Threshold {
        fn dimension(&self) -> usize {
            1
        }

        fn classify(&self, x: &[f64]) -> Result<Label> {
            Ok(Label::from_decision(x[0]))
        }
    }

    fn ten_and_ten() -> Dataset<f64> {
        let pts = (0..20)
            .map(|i| {
                let label = if i < 10 { Label::Flying } else { Label::Mobile };
                let x = if i < 10 { -1.0 - i as f64 } else { i as f64 };
                LabeledPoint::new(vec![x], label)
            })
            .collect();
        Dataset::from_points(pts).unwrap()
    }

    #[test]
    fn perfect_classifier() {
        let c = evaluate(&Threshold, &ten_and_ten()).unwrap();
        assert_eq!(c.accuracy_flying(), Some(1.0));
        assert_eq!(c.accuracy_mobile(), Some(1.0));
        assert_eq!(c.error(), Some(0.0));
    }

    #[test]
    fn constant_mobile_classifier() {
        let c = evaluate(&Constant(Label::Mobile), &ten_and_ten()).unwrap();
        assert_eq!(c.accuracy_flying(), Some(0.0));
        assert_eq!(c.accuracy_mobile(), Some(1.0));
        assert_eq!(c.error(), Some(0.5));
    }

    #[test]
    fn dimension_mismatch() {
        let d = Dataset::from_points(vec![LabeledPoint::new(vec![0.0, 1.0], Label::Mobile)]).unwrap();
        assert!(evaluate(&Threshold, &d).is_err());
    }

    #[test]
    fn method_json_is_tagged() {
        let m: Method<f64> = Method::Svm(TrainParams::new(2.0, 0.5));
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"method\":\"svm\""));
        assert_eq!(serde_json::from_str::<Method<f64>>(&text).unwrap(), m);
    }

    #[test]
    fn loo_on_wide_margin_data() {
        let pts = [
            (-10.0, Label::Flying),
            (-11.0, Label::Flying),
            (-12.0, Label::Flying),
            (10.0, Label::Mobile),
            (11.0, Label::Mobile),
            (12.0, Label::Mobile),
        ]
        .into_iter()
        .map(|(x, l)| LabeledPoint::new(vec![x], l))
        .collect();
        let d = Dataset::from_points(pts).unwrap();
        let report = cross_validate(&d, &Method::Svm(TrainParams::new(1.0, 0.01)), 6, 0).unwrap();
        assert_eq!(report.overall_error, 0.0);
        assert_eq!(report.fold_count, 6);
        assert_eq!(report.totals().total(), 6);
    }
}
