//! Random sketch operators `S in R^{ell x n}` and sketched model ingredients.
//!
//! Two matrix distributions are supported: dense scaled Gaussian (entries
//! i.i.d. `N(0, 1/ell)`) and sparse s-hashing (per column, `s` distinct rows
//! hold `+-1/sqrt(s)`). Operators are immutable after construction;
//! generation takes an explicit RNG so draws are reproducible.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::DenseMatrix;
use crate::losses::Objective;
use crate::scalar::{lit, Scalar};

#[derive(Debug, Error)]
pub enum SketchError {
    #[error("sketch size ell={ell} must satisfy 1 <= ell <= n={n}")]
    BadEll { ell: usize, n: usize },
    #[error("hashing density s={s} must satisfy 1 <= s <= ell={ell}")]
    BadS { s: usize, ell: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SketchKind {
    Gaussian,
    SHashing,
}

#[derive(Debug, Clone, PartialEq)]
enum Storage<T> {
    /// Row-major `ell x n` entries.
    Dense(Vec<T>),
    /// Column-major: column `j` occupies `rows/vals[j*s..(j+1)*s]`,
    /// row indices sorted within each column.
    Columns { s: usize, rows: Vec<u32>, vals: Vec<T> },
}

/// A realized sketch matrix with its apply/transpose-apply actions.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchOperator<T> {
    ell: usize,
    n: usize,
    storage: Storage<T>,
}

/// Default hashing density: about 10% of the subspace size, at least 1.
pub fn default_hash_density(ell: usize) -> usize {
    ((ell as f64 * 0.1).ceil() as usize).max(1)
}

fn check_ell(ell: usize, n: usize) -> Result<(), SketchError> {
    if ell < 1 || ell > n {
        return Err(SketchError::BadEll { ell, n });
    }
    Ok(())
}

/// Dense sketch with entries i.i.d. `N(0, 1/ell)`.
pub fn gaussian_sketch<T: Scalar, R: Rng + ?Sized>(
    ell: usize,
    n: usize,
    rng: &mut R,
) -> Result<SketchOperator<T>, SketchError> {
    check_ell(ell, n)?;
    // Sample in f64 and narrow, so the RNG stream (and thus the trace of a
    // seeded run) does not depend on the scalar type.
    let scale = 1.0 / (ell as f64).sqrt();
    let entries = (0..ell * n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            lit(z * scale)
        })
        .collect();
    Ok(SketchOperator { ell, n, storage: Storage::Dense(entries) })
}

/// Sparse s-hashing sketch: per column, `s` distinct rows sampled uniformly
/// without replacement, each entry `+-1/sqrt(s)` with equal probability.
///
/// Unlike the Gaussian constructor, `ell > n` is allowed here; the column
/// structure is well-defined for any `ell >= 1` and small oversampled
/// operators are useful in tests. Solver configurations still enforce
/// `ell <= n`.
pub fn shash_sketch<T: Scalar, R: Rng + ?Sized>(
    ell: usize,
    n: usize,
    s: usize,
    rng: &mut R,
) -> Result<SketchOperator<T>, SketchError> {
    if ell < 1 {
        return Err(SketchError::BadEll { ell, n });
    }
    if s < 1 || s > ell {
        return Err(SketchError::BadS { s, ell });
    }
    let mag = lit::<T>(1.0 / (s as f64).sqrt());
    let mut rows = Vec::with_capacity(n * s);
    let mut vals = Vec::with_capacity(n * s);
    let mut column: Vec<(u32, T)> = Vec::with_capacity(s);
    for _ in 0..n {
        column.clear();
        for idx in rand::seq::index::sample(rng, ell, s) {
            let sign = if rng.gen::<bool>() { mag } else { -mag };
            column.push((idx as u32, sign));
        }
        column.sort_unstable_by_key(|&(r, _)| r);
        for &(r, v) in &column {
            rows.push(r);
            vals.push(v);
        }
    }
    Ok(SketchOperator { ell, n, storage: Storage::Columns { s, rows, vals } })
}

impl<T: Scalar> SketchOperator<T> {
    /// Build from explicit row-major entries (coordinate sketches, tests).
    pub fn from_dense(ell: usize, n: usize, entries: Vec<T>) -> Result<Self, SketchError> {
        if ell < 1 {
            return Err(SketchError::BadEll { ell, n });
        }
        assert_eq!(entries.len(), ell * n, "entry count does not match ell x n");
        Ok(Self { ell, n, storage: Storage::Dense(entries) })
    }

    /// Identity-like coordinate sketch selecting the first `ell` coordinates.
    pub fn coordinate(ell: usize, n: usize) -> Result<Self, SketchError> {
        check_ell(ell, n)?;
        let mut entries = vec![T::zero(); ell * n];
        for i in 0..ell {
            entries[i * n + i] = T::one();
        }
        Self::from_dense(ell, n, entries)
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> SketchKind {
        match self.storage {
            Storage::Dense(_) => SketchKind::Gaussian,
            Storage::Columns { .. } => SketchKind::SHashing,
        }
    }

    /// Nonzeros per column (s-hashing only).
    pub fn hash_density(&self) -> Option<usize> {
        match self.storage {
            Storage::Dense(_) => None,
            Storage::Columns { s, .. } => Some(s),
        }
    }

    /// `S v` (restriction to the subspace).
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.n, "apply dimension mismatch");
        match &self.storage {
            Storage::Dense(entries) => entries
                .chunks_exact(self.n)
                .map(|row| crate::linalg::dot(row, v))
                .collect(),
            Storage::Columns { s, rows, vals } => {
                let mut out = vec![T::zero(); self.ell];
                for j in 0..self.n {
                    let vj = v[j];
                    if vj == T::zero() {
                        continue;
                    }
                    for k in j * s..(j + 1) * s {
                        out[rows[k] as usize] += vals[k] * vj;
                    }
                }
                out
            }
        }
    }

    /// `S^T u` (prolongation back to the full space).
    pub fn apply_transpose(&self, u: &[T]) -> Vec<T> {
        assert_eq!(u.len(), self.ell, "apply_transpose dimension mismatch");
        match &self.storage {
            Storage::Dense(entries) => {
                let mut out = vec![T::zero(); self.n];
                for (i, row) in entries.chunks_exact(self.n).enumerate() {
                    crate::linalg::axpy(u[i], row, &mut out);
                }
                out
            }
            Storage::Columns { s, rows, vals } => (0..self.n)
                .map(|j| {
                    (j * s..(j + 1) * s)
                        .map(|k| vals[k] * u[rows[k] as usize])
                        .sum()
                })
                .collect(),
        }
    }

    /// Row `i` of `S` as a full-space vector, i.e. `S^T e_i`.
    fn row_vector(&self, i: usize) -> Vec<T> {
        match &self.storage {
            Storage::Dense(entries) => entries[i * self.n..(i + 1) * self.n].to_vec(),
            Storage::Columns { s, rows, vals } => {
                let mut out = vec![T::zero(); self.n];
                for j in 0..self.n {
                    for k in j * s..(j + 1) * s {
                        if rows[k] as usize == i {
                            out[j] = vals[k];
                        }
                    }
                }
                out
            }
        }
    }
}

/// `S grad` — the sketched model gradient.
pub fn sketch_gradient<T: Scalar>(s: &SketchOperator<T>, g: &[T]) -> Vec<T> {
    s.apply(g)
}

/// `S H S^T` without symmetrization, one `hess_vec` call per subspace row.
pub fn sketch_hessian_raw<T: Scalar>(
    s: &SketchOperator<T>,
    obj: &dyn Objective<T>,
    x: &[T],
) -> DenseMatrix<T> {
    let ell = s.ell();
    let mut m = DenseMatrix::zeros(ell);
    for j in 0..ell {
        let col = s.apply(&obj.hess_vec(x, &s.row_vector(j)));
        for i in 0..ell {
            m.set(i, j, col[i]);
        }
    }
    m
}

/// Dense `ell x ell` sketched Hessian `S H S^T`, symmetrized as `(M + M^T)/2`.
pub fn sketch_hessian<T: Scalar>(
    s: &SketchOperator<T>,
    obj: &dyn Objective<T>,
    x: &[T],
) -> DenseMatrix<T> {
    let mut m = sketch_hessian_raw(s, obj, x);
    m.symmetrize();
    m
}
