//! Feature containers and file ingestion.
//!
//! A [`FeatureMatrix`] is an immutable N×D block of finite `f64` values stored
//! row-major. Every metric in the crate consumes one or two of them.

mod csv;
mod npy;

pub use self::csv::{load_csv, parse_label_lines};
pub use self::npy::{load_npy, read_npy, save_npy, write_npy};

use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// N×D real-valued feature vectors, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    /// Builds a matrix from a row-major buffer, validating shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty(format!("matrix shape ({rows}, {cols})")));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / cols });
        }
        Ok(FeatureMatrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Empty("no rows".into()))?;
        let cols = first.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        FeatureMatrix::new(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// New matrix made of the given rows, in order (repeats allowed).
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// Multiplies every value by `s`.
    pub fn scaled(&self, s: f64) -> Result<FeatureMatrix> {
        FeatureMatrix::new(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * s).collect(),
        )
    }

    /// Uniform subsample of `n` rows without replacement, in sampled order.
    ///
    /// Returns an unchanged copy when `n` equals the row count.
    pub fn subsample(&self, n: usize, seed: RngSeed) -> Result<FeatureMatrix> {
        Ok(self.select_rows(&subsample_indices(self.rows, n, seed)?))
    }
}

/// Indices for [`FeatureMatrix::subsample`]; identity when `n == len`.
pub fn subsample_indices(len: usize, n: usize, seed: RngSeed) -> Result<Vec<usize>> {
    if n == 0 || n > len {
        return Err(Error::param(format!(
            "cannot subsample {n} rows from {len}"
        )));
    }
    if n == len {
        return Ok((0..len).collect());
    }
    Ok(index::sample(&mut seed.rng(), len, n).into_vec())
}

/// A feature matrix with one class id in `[0, n_classes)` per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatureSet {
    features: FeatureMatrix,
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabeledFeatureSet {
    /// Infers the class count as `max(label) + 1`.
    pub fn new(features: FeatureMatrix, labels: Vec<usize>) -> Result<Self> {
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        Self::with_class_count(features, labels, n_classes)
    }

    /// Declares `n_classes` up front; every class must appear at least once.
    pub fn with_classes(
        features: FeatureMatrix,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        let set = Self::with_class_count(features, labels, n_classes)?;
        let mut seen = vec![false; n_classes];
        for &l in &set.labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::ClassTooSmall {
                class: missing,
                have: 0,
                need: 1,
            });
        }
        Ok(set)
    }

    pub(crate) fn with_class_count(
        features: FeatureMatrix,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::DimensionMismatch {
                expected: features.rows(),
                found: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::param(format!(
                "label {bad} outside [0, {n_classes})"
            )));
        }
        Ok(LabeledFeatureSet {
            features,
            labels,
            n_classes,
        })
    }

    /// All rows assigned to class 0.
    pub fn unlabeled(features: FeatureMatrix) -> Self {
        let labels = vec![0; features.rows()];
        LabeledFeatureSet {
            features,
            labels,
            n_classes: 1,
        }
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Row indices belonging to `class`, ascending.
    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == class).then_some(i))
            .collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> LabeledFeatureSet {
        LabeledFeatureSet {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    pub fn into_parts(self) -> (FeatureMatrix, Vec<usize>) {
        (self.features, self.labels)
    }
}
