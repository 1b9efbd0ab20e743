//! LIBSVM-format classification datasets in a sparse in-memory layout.
//!
//! Records look like `label idx:val idx:val ...` with 1-based, strictly
//! increasing feature indices. Internally rows are stored CSR-style with
//! 0-based indices; the dataset is immutable after construction.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Labels(String),
}

/// Target encoding for the two class labels.
///
/// The smaller raw label always maps to the smaller target value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelConvention {
    /// Labels become {-1, +1} (logistic loss).
    PlusMinusOne,
    /// Labels become {0, 1} (least-squares loss).
    ZeroOne,
}

/// Sparse sample matrix with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    n_features: usize,
    // CSR layout: row i occupies col_idx/values[row_ptr[i]..row_ptr[i+1]].
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
    labels: Vec<T>,
}

impl<T: Scalar> Dataset<T> {
    /// Assemble a dataset from per-row `(feature_index, value)` pairs with
    /// 0-based indices. Indices must be strictly increasing within a row.
    pub fn from_rows(
        n_features: usize,
        rows: Vec<Vec<(usize, T)>>,
        labels: Vec<T>,
    ) -> Result<Self, DataError> {
        assert_eq!(rows.len(), labels.len(), "row/label count mismatch");
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, row) in rows.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(idx, v) in row {
                if idx >= n_features {
                    return Err(DataError::Parse {
                        line: i + 1,
                        msg: format!("feature index {idx} out of range (n_features={n_features})"),
                    });
                }
                if prev.is_some_and(|p| idx <= p) {
                    return Err(DataError::Parse {
                        line: i + 1,
                        msg: format!("feature indices must strictly increase (index {})", idx + 1),
                    });
                }
                prev = Some(idx);
                col_idx.push(idx);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n_features, row_ptr, col_idx, values, labels })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }

    /// Sparse row `i` as parallel (indices, values) slices.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// `<z_i, x>` for sample `i`.
    #[inline]
    pub fn row_dot(&self, i: usize, x: &[T]) -> T {
        let (idx, val) = self.row(i);
        idx.iter()
            .zip(val)
            .map(|(&j, &v)| v * x[j])
            .sum()
    }

    /// `out += coef * z_i`.
    #[inline]
    pub fn add_scaled_row(&self, i: usize, coef: T, out: &mut [T]) {
        let (idx, val) = self.row(i);
        for (&j, &v) in idx.iter().zip(val) {
            out[j] += coef * v;
        }
    }

    /// Replace labels according to `convention`.
    ///
    /// Requires exactly two distinct raw label values; the smaller raw value
    /// maps to the smaller target. Rows are untouched.
    pub fn map_labels(&self, convention: LabelConvention) -> Result<Self, DataError> {
        let mut distinct: Vec<T> = Vec::new();
        for &y in &self.labels {
            if !distinct.iter().any(|&d| d == y) {
                distinct.push(y);
            }
            if distinct.len() > 2 {
                break;
            }
        }
        if distinct.len() != 2 {
            return Err(DataError::Labels(format!(
                "expected exactly 2 distinct labels, found {}",
                distinct.len()
            )));
        }
        distinct.sort_by(|a, b| a.partial_cmp(b).expect("labels are finite"));
        let lo = distinct[0];
        let (to_lo, to_hi) = match convention {
            LabelConvention::PlusMinusOne => (-T::one(), T::one()),
            LabelConvention::ZeroOne => (T::zero(), T::one()),
        };
        let labels = self
            .labels
            .iter()
            .map(|&y| if y == lo { to_lo } else { to_hi })
            .collect();
        Ok(Self { labels, ..self.clone() })
    }

    /// Serialize back to LIBSVM text (1-based indices, one record per line).
    pub fn to_libsvm(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n_samples() {
            let _ = write!(out, "{}", self.labels[i]);
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                let _ = write!(out, " {}:{}", j + 1, v);
            }
            out.push('\n');
        }
        out
    }
}

/// Parse LIBSVM text. `n_features` defaults to the maximum index seen;
/// `features_override` forces a larger dimension (files may omit trailing
/// all-zero features). Raw labels are preserved.
pub fn parse_libsvm<T: Scalar>(
    text: &str,
    features_override: Option<usize>,
) -> Result<Dataset<T>, DataError> {
    let mut rows: Vec<Vec<(usize, T)>> = Vec::new();
    let mut labels: Vec<T> = Vec::new();
    let mut max_index = 0usize; // 1-based

    for (lineno, line) in text.lines().enumerate() {
        let line_id = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_ascii_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a first token");
        let label: f64 = label_tok.parse().map_err(|_| DataError::Parse {
            line: line_id,
            msg: format!("malformed label `{label_tok}`"),
        })?;
        let mut row: Vec<(usize, T)> = Vec::new();
        let mut prev_index = 0usize; // 1-based; 0 = none yet
        for tok in tokens {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| DataError::Parse {
                line: line_id,
                msg: format!("malformed feature token `{tok}` (expected idx:val)"),
            })?;
            let idx: usize = idx_s.parse().map_err(|_| DataError::Parse {
                line: line_id,
                msg: format!("malformed feature index `{idx_s}`"),
            })?;
            if idx == 0 {
                return Err(DataError::Parse {
                    line: line_id,
                    msg: "feature indices are 1-based; found 0".into(),
                });
            }
            if idx <= prev_index {
                return Err(DataError::Parse {
                    line: line_id,
                    msg: format!("feature index {idx} not strictly increasing"),
                });
            }
            let val: f64 = val_s.parse().map_err(|_| DataError::Parse {
                line: line_id,
                msg: format!("malformed feature value `{val_s}`"),
            })?;
            prev_index = idx;
            max_index = max_index.max(idx);
            row.push((idx - 1, crate::scalar::lit(val)));
        }
        labels.push(crate::scalar::lit(label));
        rows.push(row);
    }

    let n_features = match features_override {
        Some(n) if n < max_index => {
            return Err(DataError::Parse {
                line: 0,
                msg: format!("features override {n} smaller than max index {max_index}"),
            })
        }
        Some(n) => n,
        None => max_index,
    };
    Dataset::from_rows(n_features, rows, labels)
}

/// Summary counts used by the dataset report.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats<T> {
    pub n_samples: usize,
    pub n_features: usize,
    pub nnz: usize,
    /// (label value, count) sorted by label.
    pub label_counts: Vec<(T, usize)>,
}

pub fn dataset_stats<T: Scalar>(d: &Dataset<T>) -> DatasetStats<T> {
    let mut counts: BTreeMap<u64, (T, usize)> = BTreeMap::new();
    for &y in d.labels() {
        // Key by the monotone bit pattern so labels sort numerically.
        let bits = {
            let v = y.to_f64().expect("finite label");
            let b = v.to_bits();
            if v >= 0.0 { b ^ (1 << 63) } else { !b }
        };
        counts.entry(bits).or_insert((y, 0)).1 += 1;
    }
    DatasetStats {
        n_samples: d.n_samples(),
        n_features: d.n_features(),
        nnz: d.nnz(),
        label_counts: counts.into_values().collect(),
    }
}
