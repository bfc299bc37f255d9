//! Compressed sparse column storage used by the LP kernel.

use serde::{Deserialize, Serialize};

/// Column-compressed sparse matrix. Row indices within a column are sorted
/// and duplicate entries from the triplet constructor are summed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CscMat {
    n_rows: usize,
    n_cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMat {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            col_ptr: vec![0; n_cols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from (row, col, value) triplets. Duplicates are summed,
    /// explicit zeros are dropped.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n_cols + 1];
        for &(r, c, _) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet out of bounds");
            counts[c + 1] += 1;
        }
        for j in 0..n_cols {
            counts[j + 1] += counts[j];
        }
        let mut row_idx = vec![0usize; triplets.len()];
        let mut values = vec![0f64; triplets.len()];
        let mut fill = counts.clone();
        for &(r, c, v) in triplets {
            let p = fill[c];
            row_idx[p] = r;
            values[p] = v;
            fill[c] += 1;
        }
        // sort rows within each column and merge duplicates
        let mut out_rows = Vec::with_capacity(triplets.len());
        let mut out_vals = Vec::with_capacity(triplets.len());
        let mut col_ptr = vec![0usize; n_cols + 1];
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for j in 0..n_cols {
            scratch.clear();
            for p in counts[j]..counts[j + 1] {
                scratch.push((row_idx[p], values[p]));
            }
            scratch.sort_unstable_by_key(|e| e.0);
            let mut i = 0;
            while i < scratch.len() {
                let r = scratch[i].0;
                let mut v = scratch[i].1;
                let mut k = i + 1;
                while k < scratch.len() && scratch[k].0 == r {
                    v += scratch[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    out_rows.push(r);
                    out_vals.push(v);
                }
                i = k;
            }
            col_ptr[j + 1] = out_rows.len();
        }
        Self {
            n_rows,
            n_cols,
            col_ptr,
            row_idx: out_rows,
            values: out_vals,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Row indices and values of column `j`.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        (&self.row_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn col_nnz(&self, j: usize) -> usize {
        self.col_ptr[j + 1] - self.col_ptr[j]
    }

    pub fn iter_col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (rows, vals) = self.col(j);
        rows.iter().copied().zip(vals.iter().copied())
    }

    /// y += alpha * A[:, j]
    pub fn axpy_col(&self, j: usize, alpha: f64, y: &mut [f64]) {
        for (r, v) in self.iter_col(j) {
            y[r] += alpha * v;
        }
    }

    /// Dot product of column `j` with a dense vector.
    pub fn dot_col(&self, j: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (r, v) in self.iter_col(j) {
            acc += v * x[r];
        }
        acc
    }

    /// y = A x (dense result).
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        let mut y = vec![0.0; self.n_rows];
        for j in 0..self.n_cols {
            if x[j] != 0.0 {
                self.axpy_col(j, x[j], &mut y);
            }
        }
        y
    }

    /// In-place scaling A <- R A C with diagonal row/column scales.
    pub fn scale(&mut self, row_scale: &[f64], col_scale: &[f64]) {
        for j in 0..self.n_cols {
            let cs = col_scale[j];
            let lo = self.col_ptr[j];
            let hi = self.col_ptr[j + 1];
            for p in lo..hi {
                self.values[p] *= row_scale[self.row_idx[p]] * cs;
            }
        }
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.nnz());
        for j in 0..self.n_cols {
            for (r, v) in self.iter_col(j) {
                out.push((r, j, v));
            }
        }
        out
    }

    pub fn values_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_and_sort() {
        let m = CscMat::from_triplets(3, 2, &[(2, 0, 1.0), (0, 0, 2.0), (2, 0, 3.0), (1, 1, -1.0)]);
        assert_eq!(m.nnz(), 3);
        let (rows, vals) = m.col(0);
        assert_eq!(rows, &[0, 2]);
        assert_eq!(vals, &[2.0, 4.0]);
        assert_eq!(m.col(1), (&[1usize][..], &[-1.0][..]));
    }

    #[test]
    fn mul_vec_matches_dense() {
        let m = CscMat::from_triplets(2, 3, &[(0, 0, 1.0), (1, 0, 2.0), (0, 2, -1.0)]);
        assert_eq!(m.mul_vec(&[1.0, 5.0, 2.0]), vec![-1.0, 2.0]);
    }

    #[test]
    fn explicit_zero_dropped() {
        let m = CscMat::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, -1.0), (1, 1, 2.0)]);
        assert_eq!(m.nnz(), 1);
    }
}
