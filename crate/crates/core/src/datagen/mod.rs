//! Labeled two-cohort point sets: core types, the synthetic scenario
//! generator, CSV interchange, and stratified splitting.

mod csv;
mod scenario;
mod split;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ensure, Result};
use crate::scalar::Scalar;

pub use self::csv::{load_csv, load_feature_csv, read_csv, save_csv, write_csv};
pub use self::scenario::{
    generate_scenario, GeometryParams, NoiseDistribution, NoiseParams, ScenarioSpec, TaskGeometry,
};
pub use self::split::{holdout_split, split_folds, Fold};

/// Class of a robot: flying robots are the negative class, mobile
/// (ground) robots the positive one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Flying,
    Mobile,
}

impl Label {
    /// Both labels, negative class first. Per-class loops iterate in this order.
    pub const ALL: [Label; 2] = [Label::Flying, Label::Mobile];

    pub fn value(self) -> i8 {
        match self {
            Label::Flying => -1,
            Label::Mobile => 1,
        }
    }

    pub fn from_value(value: i64) -> Option<Label> {
        match value {
            -1 => Some(Label::Flying),
            1 => Some(Label::Mobile),
            _ => None,
        }
    }

    /// The label as a signed scalar, -1 or +1.
    pub fn sign<T: Scalar>(self) -> T {
        match self {
            Label::Flying => -T::one(),
            Label::Mobile => T::one(),
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Flying => Label::Mobile,
            Label::Mobile => Label::Flying,
        }
    }

    /// Sign rule of the decision function; an exact zero maps to `Mobile`.
    pub fn from_decision<T: Scalar>(value: T) -> Label {
        if value >= T::zero() {
            Label::Mobile
        } else {
            Label::Flying
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Label::Flying => 0,
            Label::Mobile => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Label, D::Error> {
        let value = i64::deserialize(deserializer)?;
        Label::from_value(value).ok_or_else(|| serde::de::Error::custom(format!("label must be -1 or 1, got {value}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LabeledPoint<T: Scalar> {
    pub features: Vec<T>,
    pub label: Label,
}

impl<T: Scalar> LabeledPoint<T> {
    pub fn new(features: Vec<T>, label: Label) -> Self {
        LabeledPoint { features, label }
    }
}

/// An ordered collection of labeled points sharing one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T: Scalar> {
    dimension: usize,
    points: Vec<LabeledPoint<T>>,
}

impl<T: Scalar> Dataset<T> {
    /// Validates that every point has `dimension` finite features.
    pub fn new(dimension: usize, points: Vec<LabeledPoint<T>>) -> Result<Self> {
        ensure!(dimension >= 1, "dataset dimension must be at least 1");
        for (i, p) in points.iter().enumerate() {
            ensure!(
                p.features.len() == dimension,
                "point {i} has {} features, expected {dimension}",
                p.features.len()
            );
            ensure!(
                p.features.iter().all(|v| v.is_finite()),
                "point {i} has a non-finite feature"
            );
        }
        Ok(Dataset { dimension, points })
    }

    /// Infers the dimension from the first point; `points` must be non-empty.
    pub fn from_points(points: Vec<LabeledPoint<T>>) -> Result<Self> {
        let dimension = points
            .first()
            .map(|p| p.features.len())
            .ok_or_else(|| crate::KsvmError::precondition("dataset has no points"))?;
        Self::new(dimension, points)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LabeledPoint<T>] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledPoint<T>> {
        self.points.iter()
    }

    pub fn into_points(self) -> Vec<LabeledPoint<T>> {
        self.points
    }

    pub fn count(&self, label: Label) -> usize {
        self.points.iter().filter(|p| p.label == label).count()
    }

    /// Indices of the points carrying `label`, in dataset order.
    pub fn class_indices(&self, label: Label) -> Vec<usize> {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.label == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// Errors unless both labels are present.
    pub fn require_both_labels(&self) -> Result<()> {
        for label in Label::ALL {
            ensure!(
                self.count(label) > 0,
                "dataset has no points labeled {label}; both classes are required"
            );
        }
        Ok(())
    }

    /// The points at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset<T> {
        Dataset {
            dimension: self.dimension,
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
        }
    }

    /// The same points with every label negated.
    pub fn with_flipped_labels(&self) -> Dataset<T> {
        Dataset {
            dimension: self.dimension,
            points: self
                .points
                .iter()
                .map(|p| LabeledPoint::new(p.features.clone(), p.label.flipped()))
                .collect(),
        }
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        Dataset {
            dimension: self.dimension,
            points: self
                .points
                .iter()
                .map(|p| LabeledPoint::new(p.features.iter().map(|&v| U::lit(v.as_f64())).collect(), p.label))
                .collect(),
        }
    }
}

impl<'a, T: Scalar> IntoIterator for &'a Dataset<T> {
    type Item = &'a LabeledPoint<T>;
    type IntoIter = std::slice::Iter<'a, LabeledPoint<T>>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}
