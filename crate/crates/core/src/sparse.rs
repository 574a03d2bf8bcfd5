//! Sparse document-term matrix in compressed-row form.

use nalgebra::DMatrix;

use crate::error::{CoreError, Result};

/// An n_docs x n_terms sparse matrix of nonnegative weights. Rows align with
/// `row_doc_ids`; columns index a [`crate::text::Vocabulary`]. Stored
/// compressed by row with strictly increasing column indices per row, so no
/// duplicate (row, col) pairs can exist.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDocTermMatrix {
    n_docs: usize,
    n_terms: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    row_doc_ids: Vec<String>,
}

impl SparseDocTermMatrix {
    /// Builds from per-row (col, weight) lists. Each row list must have
    /// unique columns; they are sorted internally.
    pub fn from_rows(
        n_terms: usize,
        row_doc_ids: Vec<String>,
        rows: Vec<Vec<(u32, f64)>>,
    ) -> Result<Self> {
        if rows.len() != row_doc_ids.len() {
            return Err(CoreError::invalid(
                "SparseDocTermMatrix",
                "row count and doc id count differ",
            ));
        }
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(c, _)| c);
            for win in row.windows(2) {
                if win[0].0 == win[1].0 {
                    return Err(CoreError::invalid(
                        "SparseDocTermMatrix",
                        format!("duplicate column {} in row {i}", win[0].0),
                    ));
                }
            }
            for (c, v) in row {
                if (c as usize) >= n_terms {
                    return Err(CoreError::invalid(
                        "SparseDocTermMatrix",
                        format!("column {c} out of bounds in row {i}"),
                    ));
                }
                if !v.is_finite() || v < 0.0 {
                    return Err(CoreError::invalid(
                        "SparseDocTermMatrix",
                        format!("non-finite or negative weight at ({i}, {c})"),
                    ));
                }
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseDocTermMatrix {
            n_docs: row_doc_ids.len(),
            n_terms,
            row_ptr,
            cols,
            vals,
            row_doc_ids,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_doc_ids(&self) -> &[String] {
        &self.row_doc_ids
    }

    /// (col, weight) pairs of one row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    /// All (row, col, weight) triplets in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..self.n_docs).flat_map(move |i| self.row(i).map(move |(c, v)| (i as u32, c, v)))
    }

    /// Frobenius norm squared.
    pub fn frob_sq(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum()
    }

    /// Self * dense (n_docs x k result).
    pub fn mul_dense(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(rhs.nrows(), self.n_terms);
        let mut out = DMatrix::zeros(self.n_docs, rhs.ncols());
        for i in 0..self.n_docs {
            for (c, v) in self.row(i) {
                for j in 0..rhs.ncols() {
                    out[(i, j)] += v * rhs[(c as usize, j)];
                }
            }
        }
        out
    }

    /// Self^T * dense (n_terms x k result).
    pub fn tr_mul_dense(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(rhs.nrows(), self.n_docs);
        let mut out = DMatrix::zeros(self.n_terms, rhs.ncols());
        for i in 0..self.n_docs {
            for (c, v) in self.row(i) {
                for j in 0..rhs.ncols() {
                    out[(c as usize, j)] += v * rhs[(i, j)];
                }
            }
        }
        out
    }

    /// Dense copy, for small instances and oracle comparisons.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n_docs, self.n_terms);
        for (r, c, v) in self.triplets() {
            out[(r as usize, c as usize)] = v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_out_of_bounds() {
        let err = SparseDocTermMatrix::from_rows(
            3,
            vec!["d1".into()],
            vec![vec![(1, 1.0), (1, 2.0)]],
        );
        assert!(err.is_err());
        let err = SparseDocTermMatrix::from_rows(3, vec!["d1".into()], vec![vec![(3, 1.0)]]);
        assert!(err.is_err());
    }

    #[test]
    fn products_match_dense() {
        let m = SparseDocTermMatrix::from_rows(
            3,
            vec!["a".into(), "b".into()],
            vec![vec![(0, 1.0), (2, 2.0)], vec![(1, 3.0)]],
        )
        .unwrap();
        let dense = m.to_dense();
        let rhs = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, 2.0, 1.0, 3.0, 1.5]);
        assert_eq!(m.mul_dense(&rhs), &dense * &rhs);
        let lhs = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.tr_mul_dense(&lhs), dense.transpose() * &lhs);
    }
}
