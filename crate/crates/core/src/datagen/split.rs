use rand::seq::SliceRandom;

use super::{Dataset, Label};
use crate::error::{ensure, Result};
use crate::scalar::Scalar;
use crate::seed;

/// One cross-validation fold.
#[derive(Clone, Debug)]
pub struct Fold<T: Scalar> {
    pub train: Dataset<T>,
    pub validate: Dataset<T>,
    /// Positions of the validation points in the source dataset, ascending.
    pub validate_indices: Vec<usize>,
}

/// Label-stratified, seed-deterministic partition into `folds` folds.
///
/// Each class is shuffled on its own, the shuffled classes are
/// concatenated (flying first) and dealt round-robin, so fold sizes differ
/// by at most one and every fold gets its share of both classes. Points keep
/// their dataset order inside each train and validate set.
pub fn split_folds<T: Scalar>(dataset: &Dataset<T>, folds: usize, seed: u64) -> Result<Vec<Fold<T>>> {
    let n = dataset.len();
    ensure!(
        folds >= 2 && folds <= n,
        "fold count {folds} must lie in 2..={n} for a dataset of {n} points"
    );
    let mut rng = seed::rng_for(seed, &[seed::FOLDS]);
    let mut fold_of = vec![0usize; n];
    let mut position = 0;
    for label in Label::ALL {
        let mut idx = dataset.class_indices(label);
        idx.shuffle(&mut rng);
        for i in idx {
            fold_of[i] = position % folds;
            position += 1;
        }
    }
    Ok((0..folds)
        .map(|f| {
            let (validate_indices, train_indices): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold_of[i] == f);
            Fold {
                train: dataset.subset(&train_indices),
                validate: dataset.subset(&validate_indices),
                validate_indices,
            }
        })
        .collect())
}

/// Label-stratified holdout split returning `(train, test)`.
///
/// Each class contributes `round(test_fraction * class_size)` points to the
/// test set, clamped so that a class with at least two points keeps at least
/// one point on each side.
pub fn holdout_split<T: Scalar>(
    dataset: &Dataset<T>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    ensure!(
        test_fraction > 0.0 && test_fraction < 1.0,
        "test fraction {test_fraction} must lie strictly between 0 and 1"
    );
    let mut rng = seed::rng_for(seed, &[seed::HOLDOUT]);
    let mut is_test = vec![false; dataset.len()];
    for label in Label::ALL {
        let mut idx = dataset.class_indices(label);
        let size = idx.len();
        if size < 2 {
            continue;
        }
        let take = ((test_fraction * size as f64).round() as usize).clamp(1, size - 1);
        idx.shuffle(&mut rng);
        for &i in &idx[..take] {
            is_test[i] = true;
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| is_test[i]);
    Ok((dataset.subset(&train), dataset.subset(&test)))
}
