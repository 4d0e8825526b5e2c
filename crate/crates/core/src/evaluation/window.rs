//! Classification error over consecutive time windows of width `delta`:
//! each window's error is the misclassification rate of the points whose
//! timestamps fall inside it.

use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::datagen::{Dataset, LabeledPoint};
use crate::error::{ensure, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowedErrorSpec {
    /// Window width.
    pub window: f64,
    /// Streams cover `[0, horizon]`.
    pub horizon: f64,
}

impl Default for WindowedErrorSpec {
    fn default() -> Self {
        WindowedErrorSpec {
            window: 0.12,
            horizon: 1.2,
        }
    }
}

impl WindowedErrorSpec {
    pub fn new(window: f64, horizon: f64) -> Self {
        WindowedErrorSpec { window, horizon }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.window.is_finite() && self.window > 0.0,
            "window width must be positive"
        );
        ensure!(
            self.horizon.is_finite() && self.horizon >= self.window,
            "horizon {} must cover at least one window of width {}",
            self.horizon,
            self.window
        );
        Ok(())
    }

    /// Number of windows tiling `[0, horizon]`; a horizon within rounding
    /// of a whole number of windows is not given an extra sliver window.
    pub fn window_count(&self) -> usize {
        let ratio = self.horizon / self.window;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            ratio.ceil() as usize
        }
    }

    /// `[start, end)` of window `index`.
    pub fn bounds(&self, index: usize) -> (f64, f64) {
        (index as f64 * self.window, (index + 1) as f64 * self.window)
    }

    /// Window holding time `t`; `t == horizon` belongs to the last window.
    pub fn index_of(&self, t: f64) -> usize {
        let mut k = (t / self.window).floor().max(0.0) as usize;
        if self.bounds(k).1 <= t {
            k += 1;
        } else if k > 0 && self.bounds(k).0 > t {
            k -= 1;
        }
        k.min(self.window_count() - 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TimedPoint<T: Scalar> {
    pub time: f64,
    pub point: LabeledPoint<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowError {
    pub index: usize,
    pub count: usize,
    pub error: f64,
}

/// Stamps points in dataset order at the midpoints of `n` equal slices of
/// `[0, horizon]`.
pub fn assign_timestamps<T: Scalar>(dataset: &Dataset<T>, horizon: f64) -> Vec<TimedPoint<T>> {
    let n = dataset.len() as f64;
    dataset
        .iter()
        .enumerate()
        .map(|(i, p)| TimedPoint {
            time: horizon * (i as f64 + 0.5) / n,
            point: p.clone(),
        })
        .collect()
}

/// Per-window misclassification rates. Windows without points are skipped.
pub fn windowed_error<T: Scalar, C: Classifier<T> + ?Sized>(
    stream: &[TimedPoint<T>],
    model: &C,
    spec: &WindowedErrorSpec,
) -> Result<Vec<WindowError>> {
    spec.validate()?;
    for pair in stream.windows(2) {
        ensure!(
            pair[0].time <= pair[1].time,
            "timestamps must be non-decreasing ({} after {})",
            pair[1].time,
            pair[0].time
        );
    }
    let windows = spec.window_count();
    let mut wrong = vec![0usize; windows];
    let mut count = vec![0usize; windows];
    for tp in stream {
        ensure!(
            tp.time >= 0.0 && tp.time <= spec.horizon,
            "timestamp {} lies outside [0, {}]",
            tp.time,
            spec.horizon
        );
        let k = spec.index_of(tp.time);
        count[k] += 1;
        if model.classify(&tp.point.features)? != tp.point.label {
            wrong[k] += 1;
        }
    }
    Ok((0..windows)
        .filter(|&k| count[k] > 0)
        .map(|k| WindowError {
            index: k,
            count: count[k],
            error: wrong[k] as f64 / count[k] as f64,
        })
        .collect())
}
