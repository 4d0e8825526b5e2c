//! Synthetic flying/mobile cohorts around a target at the origin.
//!
//! Two task geometries are supported:
//!
//! * **encirclement**: the mobile cohort sits on the target while the
//!   flying cohort is split over `ring_centers` centers spaced evenly on a
//!   ring of radius `separation` around it;
//! * **cross-defense**: four cohort centers lie on the main diagonal,
//!   `separation` apart, alternating flying / mobile / flying / mobile. Each
//!   point is additionally spread uniformly along the anti-diagonal, which
//!   turns the cohorts into interleaved diagonal bands.
//!
//! Distances are expressed in units of the noise standard deviation `sigma`
//! so that "separation 3" always means three noise standard deviations
//! whatever the noise family.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson, Uniform};
use serde::{Deserialize, Serialize};

use super::{Dataset, Label, LabeledPoint};
use crate::error::{ensure, KsvmError, Result};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseDistribution {
    /// Isotropic Gaussian noise, standard deviation `sigma` per coordinate.
    Normal,
    /// Axis-aligned uniform box noise with standard deviation `sigma`
    /// per coordinate (half-width `sigma * sqrt(3)`).
    Uniform,
    /// Mean-centred Poisson counts on a lattice of step
    /// `sigma / sqrt(rate)`, so the per-coordinate standard deviation is
    /// again `sigma`.
    Poisson,
}

impl NoiseDistribution {
    pub const ALL: [NoiseDistribution; 3] = [
        NoiseDistribution::Normal,
        NoiseDistribution::Uniform,
        NoiseDistribution::Poisson,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseDistribution::Normal => "normal",
            NoiseDistribution::Uniform => "uniform",
            NoiseDistribution::Poisson => "poisson",
        }
    }
}

impl fmt::Display for NoiseDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseDistribution {
    type Err = KsvmError;

    fn from_str(s: &str) -> Result<Self> {
        NoiseDistribution::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| {
                KsvmError::precondition(format!(
                    "unknown distribution {s:?} (expected normal, uniform or poisson)"
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskGeometry {
    Encirclement,
    CrossDefense,
}

impl TaskGeometry {
    pub fn name(self) -> &'static str {
        match self {
            TaskGeometry::Encirclement => "encirclement",
            TaskGeometry::CrossDefense => "cross-defense",
        }
    }
}

impl fmt::Display for TaskGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskGeometry {
    type Err = KsvmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "encirclement" => Ok(TaskGeometry::Encirclement),
            "cross-defense" => Ok(TaskGeometry::CrossDefense),
            _ => Err(KsvmError::precondition(format!(
                "unknown task {s:?} (expected encirclement or cross-defense)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    /// Per-coordinate noise standard deviation, in arena units.
    pub sigma: f64,
    /// Rate of the Poisson family. The default of 4 stands in for the
    /// "4 degrees of freedom" label of the Poisson scenario.
    pub poisson_rate: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            sigma: 10.0,
            poisson_rate: 4.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryParams {
    /// Distance between neighbouring opposite-class cohort centers, in
    /// units of `sigma`.
    pub separation: f64,
    /// Number of flying-cohort centers on the encirclement ring.
    pub ring_centers: usize,
    /// Half-length of the cross-defense bands, in units of `sigma`.
    pub band_half_length: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        GeometryParams {
            separation: 3.0,
            ring_centers: 3,
            band_half_length: 6.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// Total number of robots `N`.
    pub total: usize,
    /// Number of mobile robots `r`; the other `N - r` are flying.
    pub mobile: usize,
    pub distribution: NoiseDistribution,
    pub task: TaskGeometry,
    pub seed: u64,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default)]
    pub noise: NoiseParams,
    #[serde(default)]
    pub geometry: GeometryParams,
}

fn default_dimension() -> usize {
    2
}

impl ScenarioSpec {
    /// A two-dimensional scenario with default noise and geometry.
    pub fn new(total: usize, mobile: usize, distribution: NoiseDistribution, task: TaskGeometry, seed: u64) -> Self {
        ScenarioSpec {
            total,
            mobile,
            distribution,
            task,
            seed,
            dimension: default_dimension(),
            noise: NoiseParams::default(),
            geometry: GeometryParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.total > 0, "scenario needs at least one robot (N = 0)");
        ensure!(
            self.mobile > 0 && self.mobile < self.total,
            "mobile count r = {} must satisfy 0 < r < N = {}",
            self.mobile,
            self.total
        );
        ensure!(self.dimension >= 1, "dimension must be at least 1");
        ensure!(
            self.noise.sigma.is_finite() && self.noise.sigma > 0.0,
            "noise sigma must be positive"
        );
        ensure!(
            self.noise.poisson_rate.is_finite() && self.noise.poisson_rate > 0.0,
            "poisson rate must be positive"
        );
        ensure!(
            self.geometry.separation.is_finite() && self.geometry.separation >= 0.0,
            "separation must be non-negative"
        );
        ensure!(self.geometry.ring_centers >= 1, "ring needs at least one center");
        ensure!(
            self.geometry.band_half_length.is_finite() && self.geometry.band_half_length >= 0.0,
            "band half-length must be non-negative"
        );
        Ok(())
    }

    pub fn count(&self, label: Label) -> usize {
        match label {
            Label::Mobile => self.mobile,
            Label::Flying => self.total - self.mobile,
        }
    }

    /// Cohort centers of `label` in the plane of the first two coordinates
    /// (the second is dropped when `dimension == 1`).
    pub fn cohort_centers(&self, label: Label) -> Vec<[f64; 2]> {
        let spacing = self.geometry.separation * self.noise.sigma;
        match (self.task, label) {
            (TaskGeometry::Encirclement, Label::Mobile) => vec![[0.0, 0.0]],
            (TaskGeometry::Encirclement, Label::Flying) => {
                let m = self.geometry.ring_centers;
                (0..m)
                    .map(|k| {
                        let angle = 2.0 * PI * k as f64 / m as f64;
                        [spacing * angle.cos(), spacing * angle.sin()]
                    })
                    .collect()
            }
            (TaskGeometry::CrossDefense, _) => {
                let offset = match label {
                    Label::Flying => 0,
                    Label::Mobile => 1,
                };
                [offset, offset + 2]
                    .into_iter()
                    .map(|k| {
                        let t = (k as f64 - 1.5) * spacing * FRAC_1_SQRT_2;
                        [t, t]
                    })
                    .collect()
            }
        }
    }

    /// Population mean of the `label` cohort as configured (noise and band
    /// offsets have zero mean), accounting for the round-robin allocation
    /// of points to centers.
    pub fn expected_class_mean(&self, label: Label) -> Vec<f64> {
        let centers = self.cohort_centers(label);
        let n = self.count(label);
        let mut mean = vec![0.0; self.dimension];
        for i in 0..n {
            let c = centers[i % centers.len()];
            for (d, m) in mean.iter_mut().enumerate().take(2) {
                *m += c[d];
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        mean
    }
}

enum Noise {
    Normal(Normal<f64>),
    Uniform(Uniform<f64>),
    Poisson { dist: Poisson<f64>, rate: f64, step: f64 },
}

impl Noise {
    fn new(spec: &ScenarioSpec) -> Result<Noise> {
        let sigma = spec.noise.sigma;
        let bad = |e: &dyn fmt::Display| KsvmError::precondition(format!("noise parameters: {e}"));
        Ok(match spec.distribution {
            NoiseDistribution::Normal => Noise::Normal(Normal::new(0.0, sigma).map_err(|e| bad(&e))?),
            NoiseDistribution::Uniform => {
                let half = sigma * 3f64.sqrt();
                Noise::Uniform(Uniform::new_inclusive(-half, half).map_err(|e| bad(&e))?)
            }
            NoiseDistribution::Poisson => {
                let rate = spec.noise.poisson_rate;
                Noise::Poisson {
                    dist: Poisson::new(rate).map_err(|e| bad(&e))?,
                    rate,
                    step: sigma / rate.sqrt(),
                }
            }
        })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Noise::Normal(d) => d.sample(rng),
            Noise::Uniform(d) => d.sample(rng),
            Noise::Poisson { dist, rate, step } => (dist.sample(rng) - rate) * step,
        }
    }
}

/// Generates the labeled point set described by `spec`.
///
/// The result holds exactly `r` mobile and `N - r` flying points in a
/// seed-determined interleaved order; the same spec always yields the same
/// dataset.
pub fn generate_scenario<T: Scalar>(spec: &ScenarioSpec) -> Result<Dataset<T>> {
    spec.validate()?;
    let mut rng = seed::rng_for(spec.seed, &[seed::GENERATE]);
    let noise = Noise::new(spec)?;
    let band = spec.geometry.band_half_length * spec.noise.sigma;
    let band_dist =
        Uniform::new_inclusive(-band, band).map_err(|e| KsvmError::precondition(format!("band parameters: {e}")))?;

    let mut order: Vec<Label> = std::iter::repeat_n(Label::Mobile, spec.mobile)
        .chain(std::iter::repeat_n(Label::Flying, spec.total - spec.mobile))
        .collect();
    order.shuffle(&mut rng);

    let centers = [spec.cohort_centers(Label::Flying), spec.cohort_centers(Label::Mobile)];
    let mut emitted = [0usize; 2];
    let mut points = Vec::with_capacity(spec.total);
    for label in order {
        let class = label.index();
        let center = centers[class][emitted[class] % centers[class].len()];
        emitted[class] += 1;

        let mut features: Vec<f64> = (0..spec.dimension)
            .map(|d| center.get(d).copied().unwrap_or(0.0) + noise.sample(&mut rng))
            .collect();
        if spec.task == TaskGeometry::CrossDefense && spec.dimension >= 2 {
            let u = band_dist.sample(&mut rng);
            features[0] -= u * FRAC_1_SQRT_2;
            features[1] += u * FRAC_1_SQRT_2;
        }
        points.push(LabeledPoint::new(features.into_iter().map(T::lit).collect(), label));
    }
    Dataset::new(spec.dimension, points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_determinism() {
        let spec = ScenarioSpec::new(100, 50, NoiseDistribution::Normal, TaskGeometry::Encirclement, 7);
        let a: Dataset<f64> = generate_scenario(&spec).unwrap();
        let b: Dataset<f64> = generate_scenario(&spec).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a.count(Label::Mobile), 50);
        assert_eq!(a.count(Label::Flying), 50);
        assert_eq!(a, b);
        assert_eq!(a.dimension(), 2);
    }

    #[test]
    fn tiny_cross_defense() {
        let spec = ScenarioSpec::new(4, 2, NoiseDistribution::Uniform, TaskGeometry::CrossDefense, 0);
        let d: Dataset<f64> = generate_scenario(&spec).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.count(Label::Mobile), 2);
        assert_eq!(d.count(Label::Flying), 2);
    }

    #[test]
    fn invalid_specs() {
        let mut spec = ScenarioSpec::new(10, 10, NoiseDistribution::Normal, TaskGeometry::Encirclement, 0);
        assert!(generate_scenario::<f64>(&spec).is_err());
        spec.mobile = 0;
        assert!(generate_scenario::<f64>(&spec).is_err());
        spec.total = 0;
        assert!(generate_scenario::<f64>(&spec).is_err());
    }

    #[test]
    fn poisson_offsets_sit_on_lattice() {
        let mut spec = ScenarioSpec::new(60, 30, NoiseDistribution::Poisson, TaskGeometry::Encirclement, 3);
        spec.noise.sigma = 2.0;
        spec.noise.poisson_rate = 4.0;
        spec.geometry.separation = 0.0;
        let d: Dataset<f64> = generate_scenario(&spec).unwrap();
        // step = sigma / sqrt(rate) = 1, and the offsets are integers
        for p in &d {
            for v in &p.features {
                assert_eq!(v.fract(), 0.0, "{v}");
            }
        }
    }

    #[test]
    fn higher_dimensions_pad_with_noise() {
        let mut spec = ScenarioSpec::new(20, 10, NoiseDistribution::Normal, TaskGeometry::CrossDefense, 5);
        spec.dimension = 4;
        let d: Dataset<f32> = generate_scenario(&spec).unwrap();
        assert_eq!(d.dimension(), 4);
        assert_eq!(spec.expected_class_mean(Label::Flying).len(), 4);
    }

    #[test]
    fn names_round_trip() {
        for d in NoiseDistribution::ALL {
            assert_eq!(d.name().parse::<NoiseDistribution>().unwrap(), d);
        }
        assert_eq!(
            "cross-defense".parse::<TaskGeometry>().unwrap(),
            TaskGeometry::CrossDefense
        );
        assert!("gamma".parse::<NoiseDistribution>().is_err());
    }
}
