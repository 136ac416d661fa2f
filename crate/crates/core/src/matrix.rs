//! Row-compressed storage for the dose-influence matrix.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("entry ({row}, {col}) = {value} is negative or not finite")]
    InvalidEntry { row: usize, col: usize, value: f64 },
    #[error("index ({row}, {col}) out of bounds for a {rows}x{cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Sparse nonnegative `J×I` matrix mapping beamlet intensities to voxel
/// doses (Gy per unit intensity). Rows are voxels, columns are beamlets.
///
/// Squared row norms are cached since every row-action step needs them.
#[derive(Debug, Clone, PartialEq)]
pub struct DoseInfluenceMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    row_norms_sq: Vec<f64>,
}

impl DoseInfluenceMatrix {
    /// Assembles the matrix from per-column entry lists `(row, value)`.
    ///
    /// Columns are visited in index order so each row ends up sorted by
    /// column; duplicate `(row, col)` pairs are summed in list order.
    pub fn from_columns(
        rows: usize,
        columns: &[Vec<(usize, f64)>],
    ) -> Result<Self, MatrixError> {
        let cols = columns.len();
        let mut counts = vec![0usize; rows];
        for (col, entries) in columns.iter().enumerate() {
            for &(row, value) in entries {
                if row >= rows {
                    return Err(MatrixError::OutOfBounds {
                        row,
                        col,
                        rows,
                        cols,
                    });
                }
                if !value.is_finite() || value < 0.0 {
                    return Err(MatrixError::InvalidEntry { row, col, value });
                }
                counts[row] += 1;
            }
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        row_ptr.push(0);
        for c in &counts {
            row_ptr.push(row_ptr.last().unwrap() + c);
        }
        let nnz = *row_ptr.last().unwrap();
        let mut col_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut fill = row_ptr[..rows].to_vec();
        for (col, entries) in columns.iter().enumerate() {
            for &(row, value) in entries {
                let at = fill[row];
                col_idx[at] = col;
                values[at] = value;
                fill[row] += 1;
            }
        }
        Ok(Self::compact(rows, cols, row_ptr, col_idx, values))
    }

    /// Dense constructor, mostly for tests and tiny hand-built systems.
    /// Exact zeros are not stored.
    pub fn from_dense(dense: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::new(); cols];
        for (row, r) in dense.iter().enumerate() {
            if r.len() != cols {
                return Err(MatrixError::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            for (col, &value) in r.iter().enumerate() {
                if value != 0.0 || value.is_nan() {
                    columns[col].push((row, value));
                }
            }
        }
        Self::from_columns(rows, &columns)
    }

    // Merges duplicate column indices inside each row and caches the norms.
    fn compact(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        let mut new_ptr = Vec::with_capacity(rows + 1);
        let mut new_idx = Vec::with_capacity(col_idx.len());
        let mut new_val = Vec::with_capacity(values.len());
        new_ptr.push(0);
        for r in 0..rows {
            let start = new_idx.len();
            for k in row_ptr[r]..row_ptr[r + 1] {
                if new_idx.len() > start && *new_idx.last().unwrap() == col_idx[k] {
                    *new_val.last_mut().unwrap() += values[k];
                } else {
                    new_idx.push(col_idx[k]);
                    new_val.push(values[k]);
                }
            }
            new_ptr.push(new_idx.len());
        }
        let row_norms_sq = (0..rows)
            .map(|r| new_val[new_ptr[r]..new_ptr[r + 1]].iter().map(|v| v * v).sum())
            .collect();
        Self {
            rows,
            cols,
            row_ptr: new_ptr,
            col_idx: new_idx,
            values: new_val,
            row_norms_sq,
        }
    }

    /// Number of voxels `J`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of beamlets `I`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `j`.
    #[inline]
    pub fn row(&self, j: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[j]..self.row_ptr[j + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// Cached `‖a^j‖²`.
    #[inline]
    pub fn row_norm_sq(&self, j: usize) -> f64 {
        self.row_norms_sq[j]
    }

    /// `⟨a^j, x⟩`, accumulated in column order.
    #[inline]
    pub fn row_dot(&self, j: usize, x: &[f64]) -> f64 {
        let (idx, val) = self.row(j);
        idx.iter().zip(val).map(|(&i, &a)| a * x[i]).sum()
    }

    /// `x ← x + scale·a^j`.
    #[inline]
    pub fn add_row_scaled(&self, j: usize, scale: f64, x: &mut [f64]) {
        let (idx, val) = self.row(j);
        for (&i, &a) in idx.iter().zip(val) {
            x[i] += scale * a;
        }
    }

    /// Sparse product `A x`, one row at a time in row order.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, MatrixError> {
        if x.len() != self.cols {
            return Err(MatrixError::DimensionMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok((0..self.rows).map(|j| self.row_dot(j, x)).collect())
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for (&i, &a) in self.col_idx.iter().zip(&self.values) {
            sums[i] += a;
        }
        sums
    }

    /// Number of stored entries per column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.cols];
        for &i in &self.col_idx {
            counts[i] += 1;
        }
        counts
    }

    /// Entries of column `i` as `(row, value)` pairs in row order.
    pub fn column(&self, i: usize) -> Vec<(usize, f64)> {
        (0..self.rows)
            .filter_map(|j| {
                let (idx, val) = self.row(j);
                idx.binary_search(&i).ok().map(|k| (j, val[k]))
            })
            .collect()
    }

    /// Dense copy; only sensible for small matrices.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|j| {
                let mut row = vec![0.0; self.cols];
                let (idx, val) = self.row(j);
                for (&i, &a) in idx.iter().zip(val) {
                    row[i] = a;
                }
                row
            })
            .collect()
    }
}
