//! Lloyd's k-means, run separately on each class to shrink a training set
//! to `K` labeled centroids per class.
//!
//! Clustering each class on its own means every centroid inherits the crisp
//! label of all of its members. Output clusters are ordered by their
//! lowest-index member, so when `K` equals the class size the reduced set is
//! the original dataset, point for point and in the same order.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::{Dataset, Label, LabeledPoint};
use crate::error::{ensure, KsvmError, Result};
use crate::scalar::{squared_distance, Scalar};
use crate::seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum KMeansInit {
    #[default]
    #[serde(rename = "kmeans++")]
    KMeansPlusPlus,
    #[serde(rename = "random-points")]
    RandomPoints,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    /// `K`, the number of centroids produced for each class.
    pub clusters_per_class: usize,
    pub max_iterations: usize,
    /// Stop once an iteration lowers the objective by less than this.
    pub tolerance: f64,
    pub seed: u64,
    pub init: KMeansInit,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            clusters_per_class: 10,
            max_iterations: 100,
            tolerance: 1e-8,
            seed: 0,
            init: KMeansInit::KMeansPlusPlus,
        }
    }
}

impl KMeansConfig {
    pub fn with_clusters(clusters_per_class: usize) -> Self {
        KMeansConfig {
            clusters_per_class,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.clusters_per_class >= 1, "K must be at least 1");
        ensure!(self.max_iterations >= 1, "max_iterations must be at least 1");
        ensure!(
            self.tolerance >= 0.0 && !self.tolerance.is_nan(),
            "tolerance must be non-negative"
        );
        Ok(())
    }
}

/// Result of clustering one class.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassClustering<T: Scalar> {
    pub centers: Vec<Vec<T>>,
    pub member_counts: Vec<usize>,
    /// Cluster index of every input point.
    pub assignment: Vec<usize>,
    /// Sum of squared distances from each point to its center.
    pub objective: T,
    pub iterations: usize,
    /// True when the last assignment step changed nothing.
    pub converged: bool,
    /// Objective after each update step; non-increasing.
    pub objective_trace: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Centroid<T: Scalar> {
    pub center: Vec<T>,
    pub label: Label,
    pub member_count: usize,
}

/// Labeled centroids of both classes: the reduced training set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ClusterSet<T: Scalar> {
    pub centroids: Vec<Centroid<T>>,
    /// Sum of the two per-class objectives.
    pub objective: T,
    /// Larger of the two per-class iteration counts.
    pub iterations_run: usize,
}

impl<T: Scalar> ClusterSet<T> {
    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.centroids.first().map_or(0, |c| c.center.len())
    }

    /// The centroids as an (unweighted) labeled dataset.
    pub fn to_dataset(&self) -> Result<Dataset<T>> {
        Dataset::from_points(
            self.centroids
                .iter()
                .map(|c| LabeledPoint::new(c.center.clone(), c.label))
                .collect(),
        )
    }
}

/// Nearest center by squared Euclidean distance, lowest index on ties.
fn nearest<T: Scalar>(point: &[T], centers: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, squared_distance(point, &centers[0]));
    for (j, c) in centers.iter().enumerate().skip(1) {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign_all<T: Scalar, P: AsRef<[T]>>(points: &[P], centers: &[Vec<T>]) -> Vec<usize> {
    points.iter().map(|p| nearest(p.as_ref(), centers).0).collect()
}

/// Member means, summed in point order.
fn means<T: Scalar, P: AsRef<[T]>>(
    points: &[P],
    assignment: &[usize],
    k: usize,
    q: usize,
) -> (Vec<Vec<T>>, Vec<usize>) {
    let mut sums = vec![vec![T::zero(); q]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignment) {
        counts[a] += 1;
        for (s, &v) in sums[a].iter_mut().zip(p.as_ref()) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            let denom = T::lit(c as f64);
            for v in s.iter_mut() {
                *v /= denom;
            }
        }
    }
    (sums, counts)
}

/// Update step with empty-cluster repair: an empty cluster takes over the
/// point farthest from its current center among clusters that can spare
/// one. Returns the new centers; `assignment` is edited in place.
fn update<T: Scalar, P: AsRef<[T]>>(points: &[P], assignment: &mut [usize], k: usize, q: usize) -> Vec<Vec<T>> {
    loop {
        let (centers, counts) = means(points, assignment, k, q);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return centers;
        };
        let mut victim: Option<(usize, T)> = None;
        for (i, p) in points.iter().enumerate() {
            let a = assignment[i];
            if counts[a] < 2 {
                continue;
            }
            let d = squared_distance(p.as_ref(), &centers[a]);
            if victim.is_none_or(|(_, best)| d > best) {
                victim = Some((i, d));
            }
        }
        // k <= n guarantees a cluster with two or more members
        let (i, _) = victim.expect("k-means repair found no donor cluster");
        assignment[i] = empty;
    }
}

fn objective<T: Scalar, P: AsRef<[T]>>(points: &[P], assignment: &[usize], centers: &[Vec<T>]) -> T {
    points.iter().zip(assignment).fold(T::zero(), |acc, (p, &a)| {
        acc + squared_distance(p.as_ref(), &centers[a])
    })
}

fn kmeans_plus_plus<T: Scalar, P: AsRef<[T]>>(points: &[P], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p.as_ref(), points[chosen[0]].as_ref()).as_f64())
        .collect();
    while chosen.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // every remaining point coincides with a chosen one
            Err(_) => {
                let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
                free[rng.random_range(0..free.len())]
            }
        };
        chosen.push(next);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p.as_ref(), points[next].as_ref()).as_f64());
        }
    }
    chosen
}

fn check_points<T: Scalar, P: AsRef<[T]>>(points: &[P], k: usize) -> Result<usize> {
    ensure!(!points.is_empty(), "cannot cluster an empty point set");
    ensure!(
        k <= points.len(),
        "K = {k} exceeds the number of points ({})",
        points.len()
    );
    let q = points[0].as_ref().len();
    ensure!(q >= 1, "points must have at least one coordinate");
    ensure!(
        points.iter().all(|p| p.as_ref().len() == q),
        "points have mixed dimensions"
    );
    Ok(q)
}

fn initial_centers<T: Scalar, P: AsRef<[T]>>(points: &[P], config: &KMeansConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    let k = config.clusters_per_class;
    let picks = match config.init {
        KMeansInit::KMeansPlusPlus => kmeans_plus_plus(points, k, rng),
        KMeansInit::RandomPoints => rand::seq::index::sample(rng, points.len(), k).into_vec(),
    };
    picks.into_iter().map(|i| points[i].as_ref().to_vec()).collect()
}

fn cluster_seeded<T: Scalar, P: AsRef<[T]>>(
    points: &[P],
    config: &KMeansConfig,
    salt: u64,
) -> Result<ClassClustering<T>> {
    config.validate()?;
    check_points(points, config.clusters_per_class)?;
    let mut rng = seed::rng_for(config.seed, &[seed::KMEANS, salt]);
    let centers = initial_centers(points, config, &mut rng);
    cluster_class_from(points, centers, config)
}

/// Clusters one class into exactly `K` clusters.
pub fn cluster_class<T: Scalar, P: AsRef<[T]>>(points: &[P], config: &KMeansConfig) -> Result<ClassClustering<T>> {
    cluster_seeded(points, config, 0)
}

/// Runs Lloyd iterations from the given centers. `config.clusters_per_class`
/// is ignored in favour of `centers.len()`.
pub fn cluster_class_from<T: Scalar, P: AsRef<[T]>>(
    points: &[P],
    centers: Vec<Vec<T>>,
    config: &KMeansConfig,
) -> Result<ClassClustering<T>> {
    let k = centers.len();
    ensure!(k >= 1, "at least one initial center is required");
    let q = check_points(points, k)?;
    ensure!(
        centers.iter().all(|c| c.len() == q),
        "initial centers must have dimension {q}"
    );
    let tolerance = T::lit(config.tolerance);

    let mut assignment = assign_all(points, &centers);
    let mut centers = centers;
    let mut trace: Vec<T> = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iterations.max(1) {
        centers = update(points, &mut assignment, k, q);
        let obj = objective(points, &assignment, &centers);
        let previous = trace.last().copied();
        trace.push(obj);
        let next = assign_all(points, &centers);
        if next == assignment {
            converged = true;
            break;
        }
        if previous.is_some_and(|prev| prev - obj < tolerance) {
            break;
        }
        assignment = next;
    }

    // canonical order: by lowest-index member
    let mut first_member = vec![usize::MAX; k];
    for (i, &a) in assignment.iter().enumerate() {
        first_member[a] = first_member[a].min(i);
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&j| first_member[j]);
    let mut rank = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    let assignment: Vec<usize> = assignment.iter().map(|&a| rank[a]).collect();
    let centers: Vec<Vec<T>> = order.iter().map(|&j| centers[j].clone()).collect();
    let mut member_counts = vec![0; k];
    for &a in &assignment {
        member_counts[a] += 1;
    }

    Ok(ClassClustering {
        objective: *trace.last().expect("at least one iteration runs"),
        iterations: trace.len(),
        centers,
        member_counts,
        assignment,
        converged,
        objective_trace: trace,
    })
}

/// Reduces `dataset` to `K` centroids per class.
///
/// Centroids are ordered by the dataset index of their lowest-index member.
pub fn reduce_dataset<T: Scalar>(dataset: &Dataset<T>, config: &KMeansConfig) -> Result<ClusterSet<T>> {
    config.validate()?;
    dataset.require_both_labels()?;
    let k = config.clusters_per_class;
    for label in Label::ALL {
        let size = dataset.count(label);
        ensure!(k <= size, "K = {k} exceeds the size of class {label} ({size} points)");
    }

    let run = |label: Label| -> Result<(Vec<usize>, ClassClustering<T>)> {
        let indices = dataset.class_indices(label);
        let points: Vec<&[T]> = indices
            .iter()
            .map(|&i| dataset.points()[i].features.as_slice())
            .collect();
        let clustering = cluster_seeded(&points, config, label.index() as u64)?;
        Ok((indices, clustering))
    };
    let (flying, mobile) = rayon::join(|| run(Label::Flying), || run(Label::Mobile));
    let per_class = [(Label::Flying, flying?), (Label::Mobile, mobile?)];

    let mut keyed: Vec<(usize, Centroid<T>)> = Vec::with_capacity(2 * k);
    let mut total = T::zero();
    let mut iterations = 0;
    for (label, (indices, c)) in per_class {
        total += c.objective;
        iterations = iterations.max(c.iterations);
        let mut first = vec![usize::MAX; c.centers.len()];
        for (local, &a) in c.assignment.iter().enumerate() {
            first[a] = first[a].min(indices[local]);
        }
        for ((center, count), first) in c.centers.into_iter().zip(c.member_counts).zip(first) {
            keyed.push((
                first,
                Centroid {
                    center,
                    label,
                    member_count: count,
                },
            ));
        }
    }
    keyed.sort_by_key(|(first, _)| *first);
    Ok(ClusterSet {
        centroids: keyed.into_iter().map(|(_, c)| c).collect(),
        objective: total,
        iterations_run: iterations,
    })
}

/// Index of the centroid nearest to `point`, lowest index on ties.
pub fn assign<T: Scalar>(point: &[T], cluster_set: &ClusterSet<T>) -> Result<usize> {
    let first = cluster_set
        .centroids
        .first()
        .ok_or_else(|| KsvmError::precondition("cluster set is empty"))?;
    ensure!(
        point.len() == first.center.len(),
        "point has dimension {}, cluster set has {}",
        point.len(),
        first.center.len()
    );
    let mut best = (0, squared_distance(point, &first.center));
    for (j, c) in cluster_set.centroids.iter().enumerate().skip(1) {
        let d = squared_distance(point, &c.center);
        if d < best.1 {
            best = (j, d);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: usize) -> KMeansConfig {
        KMeansConfig::with_clusters(k)
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = vec![vec![0.0, 0.0], vec![2.0, 0.0]];
        let c = cluster_class(&pts, &cfg(1)).unwrap();
        assert_eq!(c.centers, vec![vec![1.0, 0.0]]);
        assert_eq!(c.objective, 2.0);
        assert_eq!(c.member_counts, vec![2]);
        assert!(c.converged);
    }

    #[test]
    fn k_equal_n_is_exact() {
        let pts: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64 * 0.37, (i * i) as f64]).collect();
        for init in [KMeansInit::KMeansPlusPlus, KMeansInit::RandomPoints] {
            let c = cluster_class(&pts, &KMeansConfig { init, ..cfg(7) }).unwrap();
            assert_eq!(c.objective, 0.0);
            // canonical order puts cluster j on point j
            assert_eq!(c.centers, pts);
            assert_eq!(c.member_counts, vec![1; 7]);
        }
    }

    #[test]
    fn preconditions() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(cluster_class(&pts, &cfg(3)).is_err());
        let none: Vec<Vec<f64>> = vec![];
        assert!(cluster_class(&none, &cfg(1)).is_err());
        assert!(cluster_class(&pts, &cfg(0)).is_err());
    }

    #[test]
    fn duplicates_keep_every_cluster_populated() {
        let pts = vec![vec![1.0], vec![1.0], vec![1.0], vec![5.0]];
        let c = cluster_class(&pts, &cfg(3)).unwrap();
        assert!(c.member_counts.iter().all(|&m| m > 0));
        assert_eq!(c.member_counts.iter().sum::<usize>(), 4);
        assert_eq!(c.objective, 0.0);
    }

    #[test]
    fn two_point_dataset_reduces_to_itself() {
        let d = Dataset::from_points(vec![
            LabeledPoint::new(vec![0.5, 1.0], Label::Mobile),
            LabeledPoint::new(vec![-2.0, 3.0], Label::Flying),
        ])
        .unwrap();
        let cs = reduce_dataset(&d, &cfg(1)).unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs.objective, 0.0);
        assert_eq!(cs.to_dataset().unwrap(), d);
    }

    #[test]
    fn reduce_requires_both_classes_and_small_k() {
        let d = Dataset::from_points(vec![
            LabeledPoint::new(vec![0.0], Label::Mobile),
            LabeledPoint::new(vec![1.0], Label::Mobile),
            LabeledPoint::new(vec![2.0], Label::Flying),
        ])
        .unwrap();
        assert!(reduce_dataset(&d, &cfg(2)).is_err());
        let one_class = d.subset(&[0, 1]);
        assert!(reduce_dataset(&one_class, &cfg(1)).is_err());
    }

    #[test]
    fn assign_breaks_ties_low() {
        let cs = ClusterSet {
            centroids: [[-1.0], [5.0], [9.0], [1.0]]
                .iter()
                .map(|c| Centroid {
                    center: c.to_vec(),
                    label: Label::Mobile,
                    member_count: 1,
                })
                .collect(),
            objective: 0.0,
            iterations_run: 1,
        };
        assert_eq!(assign(&[0.0], &cs).unwrap(), 0);
        assert_eq!(assign(&[9.0], &cs).unwrap(), 2);
        assert!(assign(&[0.0, 1.0], &cs).is_err());
    }
}
