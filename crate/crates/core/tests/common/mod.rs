//! Independent oracles shared by the integration tests. Nothing here calls
//! into the solver, kernel or clustering code under test.

#![allow(dead_code, clippy::needless_range_loop)]

use ksvm::datagen::{Dataset, LabeledPoint};
use ksvm::Label;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Uniform points in `[-4, 4]^q` with both labels present.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, q: usize) -> Dataset<f64> {
    assert!(n >= 2);
    let mut points: Vec<LabeledPoint<f64>> = (0..n)
        .map(|_| {
            let x = (0..q).map(|_| rng.random_range(-4.0..4.0)).collect();
            let label = if rng.random_bool(0.5) {
                Label::Mobile
            } else {
                Label::Flying
            };
            LabeledPoint::new(x, label)
        })
        .collect();
    points[0].label = Label::Flying;
    points[1].label = Label::Mobile;
    Dataset::new(q, points).unwrap()
}

pub fn labels(data: &Dataset<f64>) -> Vec<f64> {
    data.iter().map(|p| f64::from(p.label.value())).collect()
}

/// `exp(-(alpha / 2) * |x - y|^2)`, written out directly.
pub fn gaussian(x: &[f64], y: &[f64], alpha: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-0.5 * alpha * d2).exp()
}

pub fn gram(data: &Dataset<f64>, alpha: f64) -> Vec<Vec<f64>> {
    let pts = data.points();
    pts.iter()
        .map(|a| pts.iter().map(|b| gaussian(&a.features, &b.features, alpha)).collect())
        .collect()
}

/// `sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij`.
pub fn dual_objective(a: &[f64], y: &[f64], k: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += a[i] * a[j] * y[i] * y[j] * k[i][j];
        }
    }
    a.iter().sum::<f64>() - 0.5 * quad
}

/// Largest violation of the soft-margin KKT conditions, measured on the
/// margins `y_i f(x_i)`.
pub fn kkt_violation(a: &[f64], b: f64, y: &[f64], k: &[Vec<f64>], penalty: f64, eps: f64) -> f64 {
    let n = a.len();
    let mut worst: f64 = (0..n).map(|i| a[i] * y[i]).sum::<f64>().abs();
    for i in 0..n {
        if a[i] < -eps || a[i] > penalty + eps {
            worst = worst.max(f64::INFINITY);
        }
        let f: f64 = (0..n).map(|j| a[j] * y[j] * k[i][j]).sum::<f64>() + b;
        let margin = y[i] * f;
        let v = if a[i] <= eps {
            (1.0 - margin).max(0.0)
        } else if a[i] >= penalty - eps {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(matrix: &[Vec<f64>]) -> Vec<f64> {
    let (values, _) = jacobi_eigen(matrix);
    values
}

/// Eigenvalues and column eigenvectors (`vectors[row][col]`).
pub fn jacobi_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Least-squares solution of a symmetric system through its
/// eigendecomposition, discarding directions below `cutoff * max|lambda|`.
fn symmetric_solve(m: &[Vec<f64>], rhs: &[f64], cutoff: f64) -> Vec<f64> {
    let n = m.len();
    let (vals, vecs) = jacobi_eigen(m);
    let top = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut x = vec![0.0; n];
    for k in 0..n {
        if vals[k].abs() <= cutoff * top {
            continue;
        }
        let proj: f64 = (0..n).map(|i| vecs[i][k] * rhs[i]).sum::<f64>() / vals[k];
        for i in 0..n {
            x[i] += proj * vecs[i][k];
        }
    }
    x
}

/// Best dual objective over every assignment of each multiplier to
/// "zero", "at the bound" or "free", where the free block solves the
/// stationarity equations together with the equality constraint.
pub fn qp_oracle(y: &[f64], k: &[Vec<f64>], penalty: f64) -> f64 {
    let n = y.len();
    let slack = 1e-9 * penalty.max(1.0);
    let mut best = f64::NEG_INFINITY;
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut state = vec![0u8; n];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut a: Vec<f64> = state.iter().map(|&s| if s == 1 { penalty } else { 0.0 }).collect();
        if !free.is_empty() {
            // unknowns: a_F then the bias
            let m = free.len() + 1;
            let mut sys = vec![vec![0.0; m]; m];
            let mut rhs = vec![0.0; m];
            for (r, &i) in free.iter().enumerate() {
                for (c, &j) in free.iter().enumerate() {
                    sys[r][c] = y[i] * y[j] * k[i][j];
                }
                sys[r][m - 1] = y[i];
                sys[m - 1][r] = y[i];
                let fixed: f64 = (0..n)
                    .filter(|&j| state[j] == 1)
                    .map(|j| y[i] * y[j] * k[i][j] * penalty)
                    .sum();
                rhs[r] = 1.0 - fixed;
            }
            rhs[m - 1] = -(0..n).filter(|&j| state[j] == 1).map(|j| y[j] * penalty).sum::<f64>();
            let sol = symmetric_solve(&sys, &rhs, 1e-13);
            for (r, &i) in free.iter().enumerate() {
                a[i] = sol[r];
            }
        }
        if a.iter().any(|&v| v < -slack || v > penalty + slack) {
            continue;
        }
        for v in a.iter_mut() {
            *v = v.clamp(0.0, penalty);
        }
        let balance: f64 = a.iter().zip(y).map(|(a, y)| a * y).sum();
        if balance.abs() > slack * n as f64 {
            continue;
        }
        best = best.max(dual_objective(&a, y, k));
    }
    best
}

/// Sum of squared distances from each point to the mean of its group.
pub fn partition_cost(points: &[Vec<f64>], groups: &[usize], k: usize) -> f64 {
    let q = points[0].len();
    let mut sums = vec![vec![0.0; q]; k];
    let mut counts = vec![0usize; k];
    for (p, &g) in points.iter().zip(groups) {
        counts[g] += 1;
        for d in 0..q {
            sums[g][d] += p[d];
        }
    }
    points
        .iter()
        .zip(groups)
        .map(|(p, &g)| {
            (0..q)
                .map(|d| (p[d] - sums[g][d] / counts[g] as f64).powi(2))
                .sum::<f64>()
        })
        .sum()
}

/// Minimum two-cluster cost over all bipartitions into non-empty groups.
pub fn best_bipartition(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << (n - 1)) {
        let groups: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
        best = best.min(partition_cost(points, &groups, 2));
    }
    best
}
