//! Dense row-major matrix of observations — the universal currency of the toolkit.

use crate::error::{Error, Result};

/// n observations by m features, dense row-major f64, with optional column names.
///
/// Zero-row matrices are representable (empty generation output); ingestion
/// paths that require data (`validated`, CSV loading) reject them.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    col_names: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "value buffer has {} entries, expected {}x{}={}",
                values.len(),
                rows,
                cols,
                rows * cols
            )));
        }
        Ok(DataMatrix { rows, cols, values, col_names: None })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DataMatrix { rows, cols, values: vec![0.0; rows * cols], col_names: None }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        let mut values = Vec::with_capacity(n * m);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != m {
                return Err(Error::data(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    r.len(),
                    m
                )));
            }
            values.extend_from_slice(r);
        }
        DataMatrix::new(n, m, values)
    }

    /// Attach column names; the count must match the column count.
    pub fn with_col_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.cols {
            return Err(Error::invalid(format!(
                "{} column names for {} columns",
                names.len(),
                self.cols
            )));
        }
        self.col_names = Some(names);
        Ok(self)
    }

    /// Ingestion validation: at least one row and column, every entry finite.
    pub fn validated(self) -> Result<Self> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::data("matrix must have at least 1 row and 1 column"));
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.values[i * self.cols + j];
                if !v.is_finite() {
                    return Err(Error::data(format!(
                        "non-finite value {} at row {}, column {}",
                        v, i, j
                    )));
                }
            }
        }
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn col_names(&self) -> Option<&[String]> {
        self.col_names.as_deref()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DataMatrix {
        let mut out = DataMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// self (n x k) times other (k x m).
    pub fn matmul(&self, other: &DataMatrix) -> Result<DataMatrix> {
        if self.cols != other.rows {
            return Err(Error::invalid(format!(
                "matmul shape mismatch: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DataMatrix::zeros(self.rows, other.cols);
        crate::numerics::la::matmul(
            self.rows,
            self.cols,
            other.cols,
            &self.values,
            &other.values,
            &mut out.values,
        );
        Ok(out)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    /// Max |a - b| over all entries; shapes must match.
    pub fn max_abs_diff(&self, other: &DataMatrix) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::invalid("shape mismatch in max_abs_diff"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffer_length() {
        assert!(DataMatrix::new(2, 3, vec![0.0; 5]).is_err());
    }

    #[test]
    fn validation_catches_nan() {
        let m = DataMatrix::new(2, 2, vec![1.0, 2.0, f64::NAN, 4.0]).unwrap();
        let err = m.validated().unwrap_err();
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(DataMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn matmul_matches_hand_computation() {
        let a = DataMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = DataMatrix::new(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.values(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn transpose_roundtrip() {
        let a = DataMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn col_names_length_checked() {
        let m = DataMatrix::zeros(1, 2);
        assert!(m.clone().with_col_names(vec!["a".into()]).is_err());
        assert!(m.with_col_names(vec!["a".into(), "b".into()]).is_ok());
    }
}
