//! Regularized classification objectives with exact derivatives.
//!
//! Both losses expose value, gradient, and Hessian-vector products through
//! the [`Objective`] trait. Hessians are never materialized; `hess_vec`
//! streams over the sparse rows, so the only dense matrix a caller ever
//! builds is a small sketched one.

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::data::Dataset;
use crate::scalar::{lit, Scalar};

#[derive(Debug, Error)]
pub enum LossError {
    #[error("labels must lie in {expected} for this loss")]
    BadLabels { expected: &'static str },
    #[error("lambda must be nonnegative")]
    NegativeLambda,
    #[error("default lambda 1/N undefined for an empty dataset")]
    EmptyDataset,
}

/// Monotone evaluation counters (snapshot).
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct EvalCounts {
    pub value: u64,
    pub gradient: u64,
    pub hess_vec: u64,
}

#[derive(Debug, Default)]
struct Counters {
    value: AtomicU64,
    gradient: AtomicU64,
    hess_vec: AtomicU64,
}

impl Counters {
    fn snapshot(&self) -> EvalCounts {
        EvalCounts {
            value: self.value.load(Ordering::Relaxed),
            gradient: self.gradient.load(Ordering::Relaxed),
            hess_vec: self.hess_vec.load(Ordering::Relaxed),
        }
    }
}

/// A twice-differentiable objective `f: R^n -> R`.
///
/// Evaluation is pure given `x`; counter updates are atomic so one objective
/// can be shared read-only across threads.
pub trait Objective<T: Scalar>: Send + Sync {
    fn dimension(&self) -> usize;
    fn value(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T]) -> Vec<T>;
    /// `grad^2 f(x) * v` without forming the matrix.
    fn hess_vec(&self, x: &[T], v: &[T]) -> Vec<T>;
    fn eval_counts(&self) -> EvalCounts {
        EvalCounts::default()
    }
}

/// Numerically safe `1 / (1 + e^-t)`.
#[inline]
pub fn sigmoid<T: Scalar>(t: T) -> T {
    if t >= T::zero() {
        T::one() / (T::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (T::one() + e)
    }
}

/// Numerically safe `ln(1 + e^t)`; branches on the sign of `t` so large
/// margins never overflow.
#[inline]
pub fn log1p_exp<T: Scalar>(t: T) -> T {
    if t > T::zero() {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `sum_i ln(1 + e^(-y_i <x, z_i>)) + (lambda/2) ||x||^2` with labels in {-1, +1}.
#[derive(Debug)]
pub struct LogisticLoss<T> {
    data: Dataset<T>,
    lambda: T,
    counters: Counters,
}

impl<T: Scalar> LogisticLoss<T> {
    pub fn new(data: Dataset<T>, lambda: T) -> Result<Self, LossError> {
        if lambda < T::zero() {
            return Err(LossError::NegativeLambda);
        }
        if !data.labels().iter().all(|&y| y == T::one() || y == -T::one()) {
            return Err(LossError::BadLabels { expected: "{-1, +1}" });
        }
        Ok(Self { data, lambda, counters: Counters::default() })
    }

    /// Construct with the default regularization `lambda = 1/N`.
    pub fn with_default_lambda(data: Dataset<T>) -> Result<Self, LossError> {
        if data.n_samples() == 0 {
            return Err(LossError::EmptyDataset);
        }
        let lambda = T::one() / lit(data.n_samples() as f64);
        Self::new(data, lambda)
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn dataset(&self) -> &Dataset<T> {
        &self.data
    }
}

impl<T: Scalar> Objective<T> for LogisticLoss<T> {
    fn dimension(&self) -> usize {
        self.data.n_features()
    }

    fn value(&self, x: &[T]) -> T {
        self.counters.value.fetch_add(1, Ordering::Relaxed);
        assert_eq!(x.len(), self.dimension(), "dimension mismatch");
        let mut sum = T::zero();
        for i in 0..self.data.n_samples() {
            let margin = self.data.labels()[i] * self.data.row_dot(i, x);
            sum += log1p_exp(-margin);
        }
        sum + lit::<T>(0.5) * self.lambda * crate::linalg::dot(x, x)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        self.counters.gradient.fetch_add(1, Ordering::Relaxed);
        assert_eq!(x.len(), self.dimension(), "dimension mismatch");
        let mut g = crate::linalg::scaled(self.lambda, x);
        for i in 0..self.data.n_samples() {
            let y = self.data.labels()[i];
            let margin = y * self.data.row_dot(i, x);
            // d/dx ln(1 + e^-m) = -y sigmoid(-m) z_i
            self.data.add_scaled_row(i, -y * sigmoid(-margin), &mut g);
        }
        g
    }

    fn hess_vec(&self, x: &[T], v: &[T]) -> Vec<T> {
        self.counters.hess_vec.fetch_add(1, Ordering::Relaxed);
        assert_eq!(x.len(), self.dimension(), "dimension mismatch");
        assert_eq!(v.len(), self.dimension(), "dimension mismatch");
        let mut out = crate::linalg::scaled(self.lambda, v);
        for i in 0..self.data.n_samples() {
            let y = self.data.labels()[i];
            let margin = y * self.data.row_dot(i, x);
            let s = sigmoid(margin);
            let weight = s * (T::one() - s); // y^2 = 1
            self.data.add_scaled_row(i, weight * self.data.row_dot(i, v), &mut out);
        }
        out
    }

    fn eval_counts(&self) -> EvalCounts {
        self.counters.snapshot()
    }
}

/// `(1/N) sum_i (y_i - sigmoid(<x, z_i>))^2 + (lambda/2) ||x||^2` with labels
/// in {0, 1}. Non-convex; the Hessian may be indefinite.
#[derive(Debug)]
pub struct LeastSquaresLoss<T> {
    data: Dataset<T>,
    lambda: T,
    counters: Counters,
}

impl<T: Scalar> LeastSquaresLoss<T> {
    pub fn new(data: Dataset<T>, lambda: T) -> Result<Self, LossError> {
        if lambda < T::zero() {
            return Err(LossError::NegativeLambda);
        }
        if !data.labels().iter().all(|&y| y == T::zero() || y == T::one()) {
            return Err(LossError::BadLabels { expected: "{0, 1}" });
        }
        Ok(Self { data, lambda, counters: Counters::default() })
    }

    /// Construct with the default regularization `lambda = 1/N`.
    pub fn with_default_lambda(data: Dataset<T>) -> Result<Self, LossError> {
        if data.n_samples() == 0 {
            return Err(LossError::EmptyDataset);
        }
        let lambda = T::one() / lit(data.n_samples() as f64);
        Self::new(data, lambda)
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    #[inline]
    fn inv_n(&self) -> T {
        let n = self.data.n_samples();
        if n == 0 { T::zero() } else { T::one() / lit(n as f64) }
    }
}

impl<T: Scalar> Objective<T> for LeastSquaresLoss<T> {
    fn dimension(&self) -> usize {
        self.data.n_features()
    }

    fn value(&self, x: &[T]) -> T {
        self.counters.value.fetch_add(1, Ordering::Relaxed);
        assert_eq!(x.len(), self.dimension(), "dimension mismatch");
        let mut sum = T::zero();
        for i in 0..self.data.n_samples() {
            let r = self.data.labels()[i] - sigmoid(self.data.row_dot(i, x));
            sum += r * r;
        }
        self.inv_n() * sum + lit::<T>(0.5) * self.lambda * crate::linalg::dot(x, x)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        self.counters.gradient.fetch_add(1, Ordering::Relaxed);
        assert_eq!(x.len(), self.dimension(), "dimension mismatch");
        let mut g = crate::linalg::scaled(self.lambda, x);
        let two_over_n = lit::<T>(2.0) * self.inv_n();
        for i in 0..self.data.n_samples() {
            let s = sigmoid(self.data.row_dot(i, x));
            let ds = s * (T::one() - s);
            let coef = two_over_n * (s - self.data.labels()[i]) * ds;
            self.data.add_scaled_row(i, coef, &mut g);
        }
        g
    }

    fn hess_vec(&self, x: &[T], v: &[T]) -> Vec<T> {
        self.counters.hess_vec.fetch_add(1, Ordering::Relaxed);
        assert_eq!(x.len(), self.dimension(), "dimension mismatch");
        assert_eq!(v.len(), self.dimension(), "dimension mismatch");
        let mut out = crate::linalg::scaled(self.lambda, v);
        let two_over_n = lit::<T>(2.0) * self.inv_n();
        for i in 0..self.data.n_samples() {
            let s = sigmoid(self.data.row_dot(i, x));
            let ds = s * (T::one() - s);
            let dds = ds * (T::one() - lit::<T>(2.0) * s);
            let weight = two_over_n * (ds * ds + (s - self.data.labels()[i]) * dds);
            self.data.add_scaled_row(i, weight * self.data.row_dot(i, v), &mut out);
        }
        out
    }

    fn eval_counts(&self) -> EvalCounts {
        self.counters.snapshot()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense random dataset plus a random point, for oracle comparisons.
    fn random_instance(
        seed: u64,
        n_samples: usize,
        n_features: usize,
        zero_one: bool,
    ) -> (Dataset<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n_samples {
            let mut row: Vec<(usize, f64)> = Vec::new();
            for j in 0..n_features {
                if rng.gen::<f64>() < 0.8 {
                    row.push((j, rng.gen_range(-2.0..2.0)));
                }
            }
            rows.push(row);
            let up = rng.gen::<bool>();
            labels.push(match (zero_one, up) {
                (true, true) => 1.0,
                (true, false) => 0.0,
                (false, true) => 1.0,
                (false, false) => -1.0,
            });
        }
        let data = Dataset::from_rows(n_features, rows, labels).unwrap();
        let x = (0..n_features).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (data, x)
    }

    /// Independent direct-summation oracle for the logistic value.
    fn naive_logistic_value(data: &Dataset<f64>, lambda: f64, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for i in 0..data.n_samples() {
            let (idx, val) = data.row(i);
            let mut dp = 0.0;
            for (&j, &v) in idx.iter().zip(val) {
                dp += v * x[j];
            }
            sum += (1.0 + (-data.labels()[i] * dp).exp()).ln();
        }
        sum + 0.5 * lambda * x.iter().map(|a| a * a).sum::<f64>()
    }

    /// Independent direct-summation oracle for the least-squares value.
    fn naive_ls_value(data: &Dataset<f64>, lambda: f64, x: &[f64]) -> f64 {
        let n = data.n_samples() as f64;
        let mut sum = 0.0;
        for i in 0..data.n_samples() {
            let (idx, val) = data.row(i);
            let mut dp = 0.0;
            for (&j, &v) in idx.iter().zip(val) {
                dp += v * x[j];
            }
            let s = dp.exp() / (1.0 + dp.exp());
            let r = data.labels()[i] - s;
            sum += r * r;
        }
        sum / n + 0.5 * lambda * x.iter().map(|a| a * a).sum::<f64>()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn logistic_value_at_zero_is_n_log2() {
        let (data, _) = random_instance(1, 20, 5, false);
        let loss = LogisticLoss::new(data, 0.7).unwrap();
        let v = loss.value(&[0.0; 5]);
        assert!(rel_err(v, 20.0 * std::f64::consts::LN_2) < 1e-14);
    }

    #[test]
    fn logistic_value_vanishes_with_growing_margin() {
        // single sample z = (1), y = +1
        let data = Dataset::from_rows(1, vec![vec![(0, 1.0)]], vec![1.0]).unwrap();
        let loss = LogisticLoss::new(data, 0.0).unwrap();
        let mut prev = f64::INFINITY;
        for t in [0.0, 5.0, 10.0, 20.0, 40.0, 300.0] {
            let v = loss.value(&[t]);
            assert!(v > 0.0, "value must stay positive, got {v}");
            assert!(v < prev, "value must decrease monotonically");
            prev = v;
        }
        assert!(prev < 1e-100);
    }

    #[test]
    fn logistic_value_matches_naive_oracle() {
        let (data, x) = random_instance(2, 20, 5, false);
        let loss = LogisticLoss::new(data.clone(), 0.3).unwrap();
        let expected = naive_logistic_value(&data, 0.3, &x);
        assert!(rel_err(loss.value(&x), expected) < 1e-12);
    }

    #[test]
    fn ls_value_matches_naive_oracle() {
        let (data, x) = random_instance(3, 20, 5, true);
        let loss = LeastSquaresLoss::new(data.clone(), 0.3).unwrap();
        let expected = naive_ls_value(&data, 0.3, &x);
        assert!(rel_err(loss.value(&x), expected) < 1e-12);
    }

    #[test]
    fn logistic_gradient_at_zero() {
        let (data, _) = random_instance(4, 10, 4, false);
        let loss = LogisticLoss::new(data.clone(), 0.0).unwrap();
        let g = loss.gradient(&[0.0; 4]);
        let mut expected = vec![0.0; 4];
        for i in 0..data.n_samples() {
            data.add_scaled_row(i, -data.labels()[i] / 2.0, &mut expected);
        }
        for (a, b) in g.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn penalty_only_gradient_is_x() {
        let data = Dataset::from_rows(3, vec![], vec![]).unwrap();
        let loss = LogisticLoss::new(data, 1.0).unwrap();
        let x = [0.3, -1.2, 2.0];
        assert_eq!(loss.gradient(&x), x.to_vec());
        // identity Hessian on the empty dataset
        let v = [1.0, 2.0, -0.5];
        assert_eq!(loss.hess_vec(&x, &v), v.to_vec());
    }

    #[test]
    fn ls_gradient_at_zero_all_ones() {
        // labels all 1: grad = -(1/(4N)) sum z_i
        let data =
            Dataset::from_rows(2, vec![vec![(0, 2.0)], vec![(1, 4.0)]], vec![1.0, 1.0]).unwrap();
        let loss = LeastSquaresLoss::new(data, 0.0).unwrap();
        let g = loss.gradient(&[0.0, 0.0]);
        assert!((g[0] - (-2.0_f64 / 8.0)).abs() < 1e-15);
        assert!((g[1] - (-4.0_f64 / 8.0)).abs() < 1e-15);
    }

    fn check_gradient_fd(obj: &dyn Objective<f64>, x: &[f64]) {
        let g = obj.gradient(x);
        for j in 0..x.len() {
            let h = 1e-6 * (1.0 + x[j].abs());
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
            if fd.abs() > 1e-8 {
                assert!(
                    rel_err(g[j], fd) < 1e-5,
                    "component {j}: analytic {} vs fd {}",
                    g[j],
                    fd
                );
            }
        }
    }

    fn check_hess_vec_fd(obj: &dyn Objective<f64>, x: &[f64], v: &[f64]) {
        let hv = obj.hess_vec(x, v);
        let h = 1e-6;
        let xp = crate::linalg::add_scaled(x, h, v);
        let xm = crate::linalg::add_scaled(x, -h, v);
        let gp = obj.gradient(&xp);
        let gm = obj.gradient(&xm);
        let fd: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let num = hv
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den = fd.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-10);
        assert!(num / den < 1e-4, "hess_vec fd mismatch: {num} / {den}");
    }

    #[test]
    fn logistic_derivatives_match_finite_differences() {
        for seed in 0..5 {
            let (data, x) = random_instance(100 + seed, 15, 6, false);
            let loss = LogisticLoss::new(data, 0.25).unwrap();
            check_gradient_fd(&loss, &x);
            let mut rng = ChaCha8Rng::seed_from_u64(999 + seed);
            let v: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            check_hess_vec_fd(&loss, &x, &v);
        }
    }

    #[test]
    fn ls_derivatives_match_finite_differences() {
        for seed in 0..5 {
            let (data, x) = random_instance(200 + seed, 15, 6, true);
            let loss = LeastSquaresLoss::new(data, 0.25).unwrap();
            check_gradient_fd(&loss, &x);
            let mut rng = ChaCha8Rng::seed_from_u64(555 + seed);
            let v: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            check_hess_vec_fd(&loss, &x, &v);
        }
    }

    #[test]
    fn hessian_symmetry() {
        let (data, x) = random_instance(7, 12, 5, false);
        let logistic = LogisticLoss::new(data, 0.1).unwrap();
        let (data2, _) = random_instance(8, 12, 5, true);
        let ls = LeastSquaresLoss::new(data2, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let u: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for obj in [&logistic as &dyn Objective<f64>, &ls] {
                let uhv = dot(&u, &obj.hess_vec(&x, &v));
                let vhu = dot(&v, &obj.hess_vec(&x, &u));
                assert!((uhv - vhu).abs() < 1e-10 * uhv.abs().max(1.0));
            }
        }
    }

    #[test]
    fn hess_vec_is_linear() {
        let (data, x) = random_instance(11, 10, 5, false);
        let loss = LogisticLoss::new(data, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let u: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a, b) = (0.7, -2.3);
        let combo: Vec<f64> = u.iter().zip(&v).map(|(ui, vi)| a * ui + b * vi).collect();
        let lhs = loss.hess_vec(&x, &combo);
        let hu = loss.hess_vec(&x, &u);
        let hv = loss.hess_vec(&x, &v);
        for j in 0..5 {
            let rhs = a * hu[j] + b * hv[j];
            assert!((lhs[j] - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn logistic_is_convex_along_lines() {
        let (data, x) = random_instance(13, 15, 5, false);
        let loss = LogisticLoss::new(data, 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..5 {
            let d: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = |t: f64| loss.value(&crate::linalg::add_scaled(&x, t, &d));
            let ts: Vec<f64> = (0..21).map(|k| -1.0 + 0.1 * k as f64).collect();
            for w in ts.windows(3) {
                let second = f(w[0]) - 2.0 * f(w[1]) + f(w[2]);
                assert!(second >= -1e-10, "second difference {second} < -1e-10");
            }
        }
    }

    #[test]
    fn counters_increase_by_one_per_call() {
        let (data, x) = random_instance(15, 8, 4, false);
        let loss = LogisticLoss::new(data, 0.1).unwrap();
        assert_eq!(loss.eval_counts(), EvalCounts::default());
        loss.value(&x);
        assert_eq!(loss.eval_counts().value, 1);
        loss.gradient(&x);
        loss.gradient(&x);
        assert_eq!(loss.eval_counts().gradient, 2);
        let v = vec![1.0; 4];
        loss.hess_vec(&x, &v);
        let c = loss.eval_counts();
        assert_eq!((c.value, c.gradient, c.hess_vec), (1, 2, 1));
    }

    #[test]
    fn default_lambda_is_one_over_n() {
        let (data, _) = random_instance(16, 25, 4, false);
        let loss = LogisticLoss::with_default_lambda(data).unwrap();
        assert_eq!(loss.lambda(), 1.0 / 25.0);
    }

    #[test]
    fn constructors_validate_labels_and_lambda() {
        let (pm, _) = random_instance(17, 6, 3, false);
        let (zo, _) = random_instance(18, 6, 3, true);
        assert!(LogisticLoss::new(zo.clone(), 0.1).is_err());
        assert!(LeastSquaresLoss::new(pm.clone(), 0.1).is_err());
        assert!(LogisticLoss::new(pm, -0.5).is_err());
        let empty = Dataset::<f64>::from_rows(2, vec![], vec![]).unwrap();
        assert!(LogisticLoss::with_default_lambda(empty).is_err());
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn value_rejects_wrong_dimension() {
        let (data, _) = random_instance(19, 5, 4, false);
        let loss = LogisticLoss::new(data, 0.1).unwrap();
        loss.value(&[0.0; 3]);
    }

    #[test]
    fn losses_work_in_f32() {
        let data = Dataset::<f32>::from_rows(
            2,
            vec![vec![(0, 1.0f32)], vec![(1, 1.0f32)]],
            vec![1.0, -1.0],
        )
        .unwrap();
        let loss = LogisticLoss::new(data, 0.0).unwrap();
        let v = loss.value(&[0.0f32, 0.0]);
        assert!((v - 2.0 * std::f32::consts::LN_2).abs() < 1e-6);
    }
}
