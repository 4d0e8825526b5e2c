use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{ensure, Result};
use crate::scalar::{squared_distance, Scalar};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    #[default]
    Gaussian,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::Gaussian => f.write_str("gaussian"),
        }
    }
}

/// Kernel family and width. The Gaussian kernel is
/// `k(x, y) = exp(-(alpha / 2) * |x - y|^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KernelSpec<T: Scalar> {
    pub family: KernelFamily,
    pub alpha: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn gaussian(alpha: T) -> Self {
        KernelSpec {
            family: KernelFamily::Gaussian,
            alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.alpha.is_finite() && self.alpha > T::zero(),
            "kernel width alpha must be positive and finite, got {}",
            self.alpha
        );
        Ok(())
    }

    /// Kernel value without the dimension check.
    #[inline]
    pub fn eval(&self, x: &[T], y: &[T]) -> T {
        match self.family {
            KernelFamily::Gaussian => {
                let half = T::lit(0.5);
                (-(half * self.alpha) * squared_distance(x, y)).exp()
            }
        }
    }
}

pub fn kernel_eval<T: Scalar>(x: &[T], y: &[T], spec: &KernelSpec<T>) -> Result<T> {
    ensure!(
        x.len() == y.len(),
        "kernel arguments have dimensions {} and {}",
        x.len(),
        y.len()
    );
    Ok(spec.eval(x, y))
}

/// Dense symmetric kernel matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Gram<T: Scalar> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> Gram<T> {
    /// Builds the matrix of `spec` over `points`, one row per rayon task.
    /// Entries are computed independently for both triangles; the kernel is
    /// exactly symmetric in floating point, so the matrix is too.
    pub fn from_points<P: AsRef<[T]> + Sync>(points: &[P], spec: &KernelSpec<T>) -> Self {
        let n = points.len();
        let mut values = vec![T::zero(); n * n];
        if n > 0 {
            values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                let xi = points[i].as_ref();
                for (j, v) in row.iter_mut().enumerate() {
                    *v = spec.eval(xi, points[j].as_ref());
                }
            });
        }
        Gram { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

pub fn gram_matrix<T: Scalar>(dataset: &Dataset<T>, spec: &KernelSpec<T>) -> Result<Gram<T>> {
    ensure!(!dataset.is_empty(), "gram matrix of an empty dataset");
    spec.validate()?;
    let points: Vec<&[T]> = dataset.iter().map(|p| p.features.as_slice()).collect();
    Ok(Gram::from_points(&points, spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{Label, LabeledPoint};

    #[test]
    fn unit_on_the_diagonal() {
        let spec = KernelSpec::gaussian(0.7);
        assert_eq!(kernel_eval(&[1.5, -2.0], &[1.5, -2.0], &spec).unwrap(), 1.0);
    }

    #[test]
    fn direct_substitution() {
        let spec = KernelSpec::gaussian(2.0);
        let v = kernel_eval(&[0.0, 0.0], &[1.0, 0.0], &spec).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.367_879_441).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch() {
        let spec = KernelSpec::gaussian(1.0);
        assert!(kernel_eval(&[0.0], &[0.0, 1.0], &spec).is_err());
    }

    #[test]
    fn singleton_gram() {
        let d = Dataset::from_points(vec![LabeledPoint::new(vec![3.0], Label::Mobile)]).unwrap();
        let g = gram_matrix(&d, &KernelSpec::gaussian(1.0)).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.get(0, 0), 1.0);
    }

    #[test]
    fn invalid_width() {
        assert!(KernelSpec::gaussian(0.0f64).validate().is_err());
        assert!(KernelSpec::gaussian(-1.0f64).validate().is_err());
        assert!(KernelSpec::gaussian(f64::NAN).validate().is_err());
    }

    #[test]
    fn f32_kernel() {
        let spec = KernelSpec::gaussian(2.0f32);
        let v = kernel_eval(&[0.0f32, 0.0], &[1.0, 0.0], &spec).unwrap();
        assert!((v - (-1.0f32).exp()).abs() < 1e-7);
    }
}
