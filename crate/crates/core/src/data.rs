//! Dense row-major matrix and the binary-labeled training view used by the
//! resamplers, the forest and the evaluator.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matrix {
    data: Vec<f64>,
    n_cols: usize,
}

impl Matrix {
    pub fn new(n_cols: usize) -> Self {
        Matrix { data: Vec::new(), n_cols }
    }

    pub fn with_capacity(n_cols: usize, n_rows: usize) -> Self {
        Matrix { data: Vec::with_capacity(n_cols * n_rows), n_cols }
    }

    pub fn from_rows<R: AsRef<[f64]>>(n_cols: usize, rows: &[R]) -> Result<Self> {
        let mut m = Matrix::with_capacity(n_cols, rows.len());
        for r in rows {
            m.push_row(r.as_ref())?;
        }
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        if self.n_cols == 0 {
            0
        } else {
            self.data.len() / self.n_cols
        }
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_cols {
            return Err(Error::WidthMismatch { expected: self.n_cols, found: row.len() });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.n_cols.max(1)).take(self.n_rows())
    }

    pub fn select(&self, indices: &[usize]) -> Matrix {
        let mut m = Matrix::with_capacity(self.n_cols, indices.len());
        for &i in indices {
            m.data.extend_from_slice(self.row(i));
        }
        m
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Squared Euclidean distance.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Binary-labeled rows. `origin[i]` is the index of the source row in the
/// dataset the view was built from, or `None` for synthesized rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryData {
    pub x: Matrix,
    pub y: Vec<bool>,
    pub origin: Vec<Option<usize>>,
}

impl BinaryData {
    pub fn new(x: Matrix, y: Vec<bool>) -> Result<Self> {
        if x.n_rows() != y.len() {
            return Err(Error::WidthMismatch { expected: x.n_rows(), found: y.len() });
        }
        let origin = (0..y.len()).map(Some).collect();
        Ok(BinaryData { x, y, origin })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.n_cols()
    }

    pub fn n_positive(&self) -> usize {
        self.y.iter().filter(|&&v| v).count()
    }

    pub fn n_negative(&self) -> usize {
        self.len() - self.n_positive()
    }

    /// Label of the smaller class; positives win a tie.
    pub fn minority_label(&self) -> bool {
        self.n_positive() <= self.n_negative()
    }

    pub fn select(&self, indices: &[usize]) -> BinaryData {
        BinaryData {
            x: self.x.select(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            origin: indices.iter().map(|&i| self.origin[i]).collect(),
        }
    }

    pub(crate) fn require_both_classes(&self) -> Result<()> {
        if self.n_positive() == 0 {
            return Err(Error::EmptyClass("positive".into()));
        }
        if self.n_negative() == 0 {
            return Err(Error::EmptyClass("negative".into()));
        }
        Ok(())
    }
}
