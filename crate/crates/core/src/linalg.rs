//! Small dense linear-algebra helpers on slices.
//!
//! Vectors are plain slices; the only materialized matrix in the whole crate
//! is the small dense [`DenseMatrix`] (sketched Hessians are `ell x ell`).

use crate::scalar::Scalar;

/// Dot product `<a, b>`.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Euclidean norm `||a||`.
#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `a + alpha * b` as a new vector.
#[inline]
pub fn add_scaled<T: Scalar>(a: &[T], alpha: T, b: &[T]) -> Vec<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x + alpha * y).collect()
}

/// `alpha * a` as a new vector.
#[inline]
pub fn scaled<T: Scalar>(alpha: T, a: &[T]) -> Vec<T> {
    a.iter().map(|&x| alpha * x).collect()
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![T::zero(); dim * dim] }
    }

    /// Build from row-major entries; `entries.len()` must equal `dim * dim`.
    pub fn from_rows(dim: usize, entries: Vec<T>) -> Self {
        assert_eq!(entries.len(), dim * dim, "entry count does not match dimension");
        Self { dim, data: entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
    }

    /// Matrix-vector product `A v`.
    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.dim, "matvec dimension mismatch");
        self.data
            .chunks_exact(self.dim)
            .map(|row| dot(row, v))
            .collect()
    }

    /// Replace `A` with `(A + A^T) / 2`.
    pub fn symmetrize(&mut self) {
        let half = crate::scalar::lit::<T>(0.5);
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let m = half * (self.get(i, j) + self.get(j, i));
                self.set(i, j, m);
                self.set(j, i, m);
            }
        }
    }

    /// Largest absolute deviation from symmetry, `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Solve `A x = b` for symmetric `A` via an LDL^T factorization without
    /// pivoting. Returns `None` when a pivot is negligible relative to the
    /// matrix scale (singular or numerically indefinite-degenerate system).
    pub fn solve_symmetric(&self, b: &[T]) -> Option<Vec<T>> {
        assert_eq!(b.len(), self.dim, "solve dimension mismatch");
        let n = self.dim;
        if n == 0 {
            return Some(Vec::new());
        }
        let scale = self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        if scale == T::zero() {
            return None;
        }
        let tol = T::epsilon() * crate::scalar::lit::<T>(n as f64) * scale;

        // Lower-triangular L with unit diagonal, diagonal D.
        let mut l = vec![T::zero(); n * n];
        let mut d = vec![T::zero(); n];
        for j in 0..n {
            let mut dj = self.get(j, j);
            for k in 0..j {
                dj = dj - l[j * n + k] * l[j * n + k] * d[k];
            }
            if dj.abs() <= tol {
                return None;
            }
            d[j] = dj;
            l[j * n + j] = T::one();
            for i in (j + 1)..n {
                let mut v = self.get(i, j);
                for k in 0..j {
                    v = v - l[i * n + k] * l[j * n + k] * d[k];
                }
                l[i * n + j] = v / dj;
            }
        }

        // Forward substitution L z = b.
        let mut z = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let lik = l[i * n + k];
                let zk = z[k];
                z[i] = z[i] - lik * zk;
            }
        }
        // Diagonal scaling and back substitution L^T x = z / d.
        for i in 0..n {
            z[i] = z[i] / d[i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let lki = l[k * n + i];
                let zk = z[k];
                z[i] = z[i] - lki * zk;
            }
        }
        Some(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_and_norm() {
        let a = [3.0f64, 4.0];
        assert_eq!(dot(&a, &a), 25.0);
        assert_eq!(norm(&a), 5.0);
    }

    #[test]
    fn matvec_identity() {
        let mut m = DenseMatrix::<f64>::zeros(3);
        for i in 0..3 {
            m.set(i, i, 1.0);
        }
        let v = vec![1.0, 2.0, 3.0];
        assert_eq!(m.matvec(&v), v);
    }

    #[test]
    fn solve_symmetric_spd() {
        // A = [[4,1],[1,3]], b = [1,2] -> x = [1/11, 7/11]
        let a = DenseMatrix::from_rows(2, vec![4.0f64, 1.0, 1.0, 3.0]);
        let x = a.solve_symmetric(&[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn solve_symmetric_indefinite() {
        // Indefinite but nonsingular: diag(1, -2).
        let a = DenseMatrix::from_rows(2, vec![1.0f64, 0.0, 0.0, -2.0]);
        let x = a.solve_symmetric(&[3.0, 4.0]).unwrap();
        assert_eq!(x, vec![3.0, -2.0]);
    }

    #[test]
    fn solve_symmetric_singular_is_none() {
        let a = DenseMatrix::from_rows(2, vec![1.0f64, 1.0, 1.0, 1.0]);
        assert!(a.solve_symmetric(&[1.0, 2.0]).is_none());
    }

    #[test]
    fn symmetrize_and_asymmetry() {
        let mut m = DenseMatrix::from_rows(2, vec![1.0f64, 2.0, 4.0, 3.0]);
        assert_eq!(m.asymmetry(), 2.0);
        m.symmetrize();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
        assert_eq!(m.asymmetry(), 0.0);
    }

    #[test]
    fn generic_over_f32() {
        let a = [3.0f32, 4.0];
        assert!((norm(&a) - 5.0).abs() < 1e-6);
    }
}
