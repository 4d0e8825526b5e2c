//! Two-multiplier SMO for the soft-margin dual
//!
//! ```text
//! maximize   sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j k(x_i, x_j)
//! subject to 0 <= a_i <= M,  sum_i a_i y_i = 0
//! ```
//!
//! The outer loop alternates full sweeps with sweeps over the unbounded
//! multipliers. Optimality is judged against two thresholds, the smallest
//! residual among multipliers that can raise their margin and the largest
//! among those that can lower it, rather than a single running `b`; a
//! violating multiplier is paired with the extreme of the opposite set, which
//! maximizes `|E1 - E2|`. When a run ends with the final model still
//! violating the KKT conditions (the threshold `b` is recomputed from all
//! unbounded support vectors at the end), the working tolerance is halved
//! and the loop resumes.

use super::kernel::{Gram, KernelSpec};
use crate::datagen::Dataset;
use crate::scalar::Scalar;

enum KernelSource<'a, T: Scalar> {
    Cached(Gram<T>),
    Direct { points: Vec<&'a [T]>, spec: KernelSpec<T> },
}

impl<T: Scalar> KernelSource<'_, T> {
    #[inline]
    fn get(&self, i: usize, j: usize) -> T {
        match self {
            KernelSource::Cached(g) => g.get(i, j),
            KernelSource::Direct { points, spec } => spec.eval(points[i], points[j]),
        }
    }
}

/// Full dual solution over the training set.
#[derive(Clone, Debug)]
pub struct DualSolution<T: Scalar> {
    /// One multiplier per training point, in dataset order.
    pub alphas: Vec<T>,
    pub bias: T,
    pub dual_objective: T,
    pub converged: bool,
    /// Successful pair updates.
    pub iterations: usize,
    /// Outer-loop sweeps.
    pub sweeps: usize,
    /// Largest KKT violation of the returned solution.
    pub max_violation: T,
}

/// Working tolerance of the first stage when a tighter one is requested.
const COARSE_TOLERANCE: f64 = 1e-3;

/// Largest free set handed to the dense Newton polish.
const POLISH_LIMIT: usize = 400;

/// Gaussian elimination with partial pivoting; `None` when singular.
fn lu_solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()));
    let tiny = scale * T::epsilon() * T::lit(n as f64);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(a[pivot][col].abs() > tiny) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

pub(crate) struct SolverSettings<T> {
    pub penalty: T,
    pub tolerance: T,
    pub epsilon: T,
    pub max_sweeps: usize,
    pub cache_limit: usize,
}

struct Smo<'a, T: Scalar> {
    kernel: KernelSource<'a, T>,
    y: Vec<T>,
    alpha: Vec<T>,
    /// `sum_j a_j y_j k(x_i, x_j)`, the decision value without the bias.
    grad: Vec<T>,
    /// Smallest `F` over the up set and largest over the low set, with
    /// their indices; optimal when `b_low <= b_up + 2 tol`.
    b_up: (usize, T),
    b_low: (usize, T),
    c: T,
    /// Snap-to-bound and minimum-progress threshold.
    eps: T,
    iterations: usize,
    sweeps: usize,
}

impl<T: Scalar> Smo<'_, T> {
    /// Decision value minus label, before the bias: `E_i - b`.
    #[inline]
    fn residual(&self, i: usize) -> T {
        self.grad[i] - self.y[i]
    }

    /// Multipliers that may move so as to raise `y_i f(x_i)`.
    #[inline]
    fn in_up(&self, i: usize) -> bool {
        if self.y[i] > T::zero() {
            self.alpha[i] < self.c
        } else {
            self.alpha[i] > T::zero()
        }
    }

    #[inline]
    fn in_low(&self, i: usize) -> bool {
        if self.y[i] > T::zero() {
            self.alpha[i] > T::zero()
        } else {
            self.alpha[i] < self.c
        }
    }

    fn update_bounds(&mut self) {
        let mut up = (usize::MAX, T::infinity());
        let mut low = (usize::MAX, T::neg_infinity());
        for i in 0..self.alpha.len() {
            let f = self.residual(i);
            if self.in_up(i) && f < up.1 {
                up = (i, f);
            }
            if self.in_low(i) && f > low.1 {
                low = (i, f);
            }
        }
        self.b_up = up;
        self.b_low = low;
    }

    #[inline]
    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > T::zero() && self.alpha[i] < self.c
    }

    fn snap(&self, a: T) -> T {
        if a < self.eps {
            T::zero()
        } else if a > self.c - self.eps {
            self.c
        } else {
            a
        }
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let zero = T::zero();
        let (a1_old, a2_old) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.residual(i1), self.residual(i2));
        let s = y1 * y2;
        let (low, high) = if s < zero {
            (zero.max(a2_old - a1_old), self.c.min(self.c + a2_old - a1_old))
        } else {
            (zero.max(a1_old + a2_old - self.c), self.c.min(a1_old + a2_old))
        };
        if high - low <= self.eps {
            return false;
        }
        let k11 = self.kernel.get(i1, i1);
        let k12 = self.kernel.get(i1, i2);
        let k22 = self.kernel.get(i2, i2);
        let eta = k11 + k22 - T::lit(2.0) * k12;

        let mut a2 = if eta > self.eps {
            (a2_old + y2 * (e1 - e2) / eta).max(low).min(high)
        } else {
            // flat direction: the dual is linear along the segment
            let slope = y2 * (e1 - e2);
            if slope > self.eps {
                high
            } else if slope < -self.eps {
                low
            } else {
                a2_old
            }
        };
        a2 = self.snap(a2);
        if (a2 - a2_old).abs() < self.eps * (a2 + a2_old + self.eps) {
            return false;
        }
        let a1 = self.snap((a1_old + s * (a2_old - a2)).max(zero).min(self.c));

        let d1 = (a1 - a1_old) * y1;
        let d2 = (a2 - a2_old) * y2;
        for k in 0..self.grad.len() {
            let delta = d1 * self.kernel.get(i1, k) + d2 * self.kernel.get(i2, k);
            self.grad[k] += delta;
        }
        self.alpha[i1] = a1;
        self.alpha[i2] = a2;
        self.update_bounds();
        self.iterations += 1;
        true
    }

    fn examine(&mut self, i2: usize, tol: T) -> bool {
        let n = self.alpha.len();
        let f2 = self.residual(i2);
        let two_tol = T::lit(2.0) * tol;
        let up_violates = self.in_up(i2) && f2 < self.b_low.1 - two_tol;
        let low_violates = self.in_low(i2) && f2 > self.b_up.1 + two_tol;
        if !up_violates && !low_violates {
            return false;
        }
        // partner: the extreme of the opposite set, i.e. the largest |E1 - E2|
        let partner = match (up_violates, low_violates) {
            (true, false) => Some(self.b_low.0),
            (false, true) => Some(self.b_up.0),
            _ if self.b_low.1 - f2 >= f2 - self.b_up.1 => Some(self.b_low.0),
            _ => Some(self.b_up.0),
        };
        let Some(i1) = partner else {
            return false;
        };
        if self.take_step(i1, i2) {
            return true;
        }
        let free: Vec<usize> = (0..n).filter(|&i| self.is_free(i)).collect();
        // deterministic rotation in place of a random starting point
        if !free.is_empty() {
            let start = (i2 + 1) % free.len();
            for k in 0..free.len() {
                if self.take_step(free[(start + k) % free.len()], i2) {
                    return true;
                }
            }
        }
        for k in 1..n {
            if self.take_step((i2 + k) % n, i2) {
                return true;
            }
        }
        false
    }

    /// Platt's outer loop at working tolerance `tol`. Returns false when the
    /// sweep budget ran out first.
    fn run(&mut self, tol: T, max_sweeps: usize) -> bool {
        let n = self.alpha.len();
        let mut examine_all = true;
        loop {
            if self.sweeps >= max_sweeps {
                return false;
            }
            self.sweeps += 1;
            self.update_bounds();
            let mut changed = 0;
            if examine_all {
                for i in 0..n {
                    changed += usize::from(self.examine(i, tol));
                }
            } else {
                for i in 0..n {
                    if self.is_free(i) {
                        changed += usize::from(self.examine(i, tol));
                    }
                }
            }
            if examine_all {
                if changed == 0 {
                    return true;
                }
                examine_all = false;
            } else {
                // pair steps crawl along flat directions of the free block;
                // jump to its optimum instead
                self.polish(POLISH_LIMIT);
                if changed == 0 {
                    examine_all = true;
                }
            }
        }
    }

    /// One active-set Newton step: solves the (ridged) stationarity equations
    /// of the free multipliers (with the bias as the equality multiplier) and moves
    /// towards that solution as far as the box allows. Returns true when a
    /// bound blocked the step, i.e. when another step may help.
    fn newton_step(&mut self, limit: usize) -> bool {
        let n = self.alpha.len();
        let free: Vec<usize> = (0..n).filter(|&i| self.is_free(i)).collect();
        let m = free.len();
        if m < 2 || m > limit {
            return false;
        }
        let zero = T::zero();
        // unknowns: the direction on the free block, then the bias
        let mut sys = vec![vec![zero; m + 1]; m + 1];
        let mut rhs = vec![zero; m + 1];
        // a small ridge keeps near-singular blocks solvable; flat directions
        // then take long steps that the box clips onto a bound
        let ridge = T::epsilon().sqrt();
        for (r, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                sys[r][c] = self.y[i] * self.y[j] * self.kernel.get(i, j);
            }
            sys[r][r] += ridge;
            sys[r][m] = self.y[i];
            sys[m][r] = self.y[i];
            rhs[r] = T::one() - self.y[i] * self.grad[i];
        }
        let residual = self.alpha.iter().zip(&self.y).map(|(&a, &y)| a * y).sum::<T>();
        rhs[m] = -residual;
        let Some(sol) = lu_solve(sys, rhs) else {
            return false;
        };
        // restore sum(y d) = -residual exactly, lost when the block is near singular
        let mut d = sol[..m].to_vec();
        let drift = (free.iter().zip(&d).map(|(&i, &v)| self.y[i] * v).sum::<T>() + residual) / T::lit(m as f64);
        for (v, &i) in d.iter_mut().zip(&free) {
            *v -= drift * self.y[i];
        }

        if d.iter().all(|v| v.abs() <= self.eps) {
            return false;
        }
        // the dual along alpha + t d is concave; step towards its peak, at
        // most to the Newton point and never out of the box
        let mut slope = zero;
        let mut curvature = zero;
        for (r, &i) in free.iter().enumerate() {
            slope += (T::one() - self.y[i] * self.grad[i]) * d[r];
            for (c, &j) in free.iter().enumerate() {
                curvature += d[r] * d[c] * self.y[i] * self.y[j] * self.kernel.get(i, j);
            }
        }
        if !(slope > zero) || !(curvature > zero) {
            return false;
        }
        let mut t = (slope / curvature).min(T::one());
        let mut blocked = None;
        for (r, &i) in free.iter().enumerate() {
            let limit = if d[r] > zero {
                (self.c - self.alpha[i]) / d[r]
            } else if d[r] < zero {
                -self.alpha[i] / d[r]
            } else {
                continue;
            };
            if limit < t {
                t = limit;
                blocked = Some(r);
            }
        }
        if !(t > zero) {
            return false;
        }
        for (r, &i) in free.iter().enumerate() {
            let old = self.alpha[i];
            let new = if blocked == Some(r) {
                if d[r] > zero {
                    self.c
                } else {
                    zero
                }
            } else {
                self.snap((old + t * d[r]).max(zero).min(self.c))
            };
            let delta = (new - old) * self.y[i];
            if delta != zero {
                for k in 0..n {
                    self.grad[k] += delta * self.kernel.get(i, k);
                }
            }
            self.alpha[i] = new;
        }
        self.iterations += 1;
        blocked.is_some()
    }

    /// Chains Newton steps while bounds keep blocking them; long chains
    /// only while the dense solves are cheap.
    fn polish(&mut self, limit: usize) {
        let free = self.alpha.iter().filter(|&&a| a > T::zero() && a < self.c).count();
        let rounds = if free <= 64 { 64 } else { 2 };
        for _ in 0..rounds {
            if !self.newton_step(limit) {
                break;
            }
        }
    }

    fn refresh_gradient(&mut self) {
        let n = self.alpha.len();
        let support: Vec<usize> = (0..n).filter(|&j| self.alpha[j] > T::zero()).collect();
        for i in 0..n {
            let mut g = T::zero();
            for &j in &support {
                g += self.alpha[j] * self.y[j] * self.kernel.get(i, j);
            }
            self.grad[i] = g;
        }
    }

    /// Pushes the residual of `sum a_i y_i` onto the largest unbounded
    /// multiplier that can absorb it.
    fn rebalance(&mut self) {
        let residual: T = self.alpha.iter().zip(&self.y).map(|(&a, &y)| a * y).sum();
        if residual == T::zero() {
            return;
        }
        let target = (0..self.alpha.len())
            .filter(|&i| self.is_free(i))
            .filter(|&i| {
                let a = self.alpha[i] - residual * self.y[i];
                a > T::zero() && a < self.c
            })
            .max_by(|&i, &j| {
                self.alpha[i]
                    .partial_cmp(&self.alpha[j])
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
        if let Some(i) = target {
            self.alpha[i] -= residual * self.y[i];
        }
    }

    /// Threshold from the unbounded support vectors, or the midpoint of the
    /// interval allowed by the bounded ones.
    fn final_bias(&self) -> T {
        let n = self.alpha.len();
        let mut sum = T::zero();
        let mut free = 0usize;
        let mut lower = T::neg_infinity();
        let mut upper = T::infinity();
        for i in 0..n {
            let implied = self.y[i] - self.grad[i];
            if self.is_free(i) {
                sum += implied;
                free += 1;
            } else {
                let at_zero = self.alpha[i] == T::zero();
                // a = 0 wants y f >= 1, a = M wants y f <= 1
                if (self.y[i] > T::zero()) == at_zero {
                    lower = lower.max(implied);
                } else {
                    upper = upper.min(implied);
                }
            }
        }
        if free > 0 {
            return sum / T::lit(free as f64);
        }
        match (lower.is_finite(), upper.is_finite()) {
            (true, true) => (lower + upper) * T::lit(0.5),
            (true, false) => lower,
            (false, true) => upper,
            (false, false) => T::zero(),
        }
    }

    fn max_violation(&self, b: T) -> T {
        let one = T::one();
        let mut worst = T::zero();
        for i in 0..self.alpha.len() {
            let margin = self.y[i] * (self.grad[i] + b);
            let v = if self.alpha[i] == T::zero() {
                one - margin
            } else if self.alpha[i] == self.c {
                margin - one
            } else {
                (margin - one).abs()
            };
            worst = worst.max(v);
        }
        worst
    }

    fn dual_objective(&self) -> T {
        let mut linear = T::zero();
        let mut quadratic = T::zero();
        for i in 0..self.alpha.len() {
            linear += self.alpha[i];
            quadratic += self.alpha[i] * self.y[i] * self.grad[i];
        }
        linear - T::lit(0.5) * quadratic
    }
}

pub(crate) fn solve<T: Scalar>(
    dataset: &Dataset<T>,
    spec: &KernelSpec<T>,
    settings: &SolverSettings<T>,
) -> DualSolution<T> {
    let n = dataset.len();
    let points: Vec<&[T]> = dataset.iter().map(|p| p.features.as_slice()).collect();
    let kernel = if n <= settings.cache_limit {
        KernelSource::Cached(Gram::from_points(&points, spec))
    } else {
        KernelSource::Direct { points, spec: *spec }
    };
    let mut smo = Smo {
        kernel,
        y: dataset.iter().map(|p| p.label.sign()).collect(),
        alpha: vec![T::zero(); n],
        grad: vec![T::zero(); n],
        b_up: (0, T::zero()),
        b_low: (0, T::zero()),
        c: settings.penalty,
        eps: settings.epsilon * settings.penalty.max(T::one()),
        iterations: 0,
        sweeps: 0,
    };

    // coarse first: each tighter stage starts from a polished iterate
    let mut tol = settings.tolerance.max(T::lit(COARSE_TOLERANCE));
    let floor = settings.epsilon * T::lit(16.0);
    let (bias, violation, converged) = loop {
        let finished = smo.run(tol, settings.max_sweeps);
        smo.polish(POLISH_LIMIT);
        smo.rebalance();
        smo.refresh_gradient();
        let bias = smo.final_bias();
        let violation = smo.max_violation(bias);
        if violation <= settings.tolerance {
            break (bias, violation, true);
        }
        if !finished || tol <= floor {
            break (bias, violation, false);
        }
        tol = if tol > settings.tolerance {
            (tol * T::lit(0.1)).max(settings.tolerance)
        } else {
            tol * T::lit(0.5)
        };
    };

    DualSolution {
        dual_objective: smo.dual_objective(),
        alphas: smo.alpha,
        bias,
        converged,
        iterations: smo.iterations,
        sweeps: smo.sweeps,
        max_violation: violation,
    }
}
