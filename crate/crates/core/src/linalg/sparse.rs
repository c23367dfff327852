use std::fmt::Write as _;
use std::path::Path;

use crate::{CosegError, Result};

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from per-row `(column, value)` lists. Rows are sorted by column;
    /// duplicate columns are summed.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let start = col_idx.len();
            for (c, v) in row {
                assert!(c < n_cols, "column {c} out of range");
                if col_idx.len() > start && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n_rows: row_ptr.len() - 1,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Row-wise absolute sums, an upper bound on the spectral radius per row.
    pub fn abs_row_sums(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum())
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        crate::par::map_range(self.n_rows, |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum()
        })
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                m[(i, c)] = v;
            }
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        self.n_rows == self.n_cols
            && (0..self.n_rows).all(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).all(|(&j, &v)| self.get(j, i) == v)
            })
    }

    /// Matrix Market coordinate format (`general`, 1-based indices).
    pub fn write_matrix_market(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "%%MatrixMarket matrix coordinate real general");
        let _ = writeln!(out, "{} {} {}", self.n_rows, self.n_cols, self.nnz());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, v) in cols.iter().zip(vals) {
                let _ = writeln!(out, "{} {} {:?}", i + 1, c + 1, v);
            }
        }
        std::fs::write(path, out).map_err(|e| CosegError::io(path, e))
    }

    /// Diagonal matrix in Matrix Market format.
    pub fn write_diagonal_matrix_market(diag: &[f64], path: &Path) -> Result<()> {
        let rows = diag
            .iter()
            .enumerate()
            .map(|(i, &d)| vec![(i, d)])
            .collect();
        CsrMatrix::from_rows(diag.len(), rows).write_matrix_market(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_and_query() {
        let m = CsrMatrix::from_rows(
            3,
            vec![
                vec![(2, 1.0), (0, 4.0), (2, 0.5)],
                vec![(1, 2.0)],
                vec![(0, 1.5), (2, 3.0)],
            ],
        );
        assert_eq!(m.nnz(), 5);
        assert_eq!(m.get(0, 2), 1.5);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.diagonal(), vec![4.0, 2.0, 3.0]);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 2.0]), vec![7.0, 2.0, 7.5]);
        assert!(m.is_symmetric());
    }

    #[test]
    fn matrix_market_output() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.mtx");
        let m = CsrMatrix::from_rows(2, vec![vec![(0, 1.0), (1, -0.5)], vec![(0, -0.5)]]);
        m.write_matrix_market(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(
            text,
            "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n1 2 -0.5\n2 1 -0.5\n"
        );
    }
}
