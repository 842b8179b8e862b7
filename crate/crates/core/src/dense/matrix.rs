use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense real matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries, rejecting empty shapes and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidDimensions {
                rows,
                cols,
                reason: "matrices must be non-empty",
            });
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                got: format!("{} entries", data.len()),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Internal constructor for kernel outputs whose shape is known to be valid.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert!(rows > 0 && cols > 0 && data.len() == rows * cols);
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch {
                expected: format!("rows of length {c}"),
                got: "ragged rows".into(),
            });
        }
        Self::new(r, c, rows.iter().flat_map(|row| row.iter().copied()).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "matrices must be non-empty");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Matrix whose columns are the given equal-length vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let c = columns.len();
        let r = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|col| col.len() != r) {
            return Err(Error::DimensionMismatch {
                expected: format!("columns of length {r}"),
                got: "ragged columns".into(),
            });
        }
        let mut data = vec![0.0; r * c];
        for (j, col) in columns.iter().enumerate() {
            for (i, &x) in col.iter().enumerate() {
                data[i * c + j] = x;
            }
        }
        Self::new(r, c, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| 0.0)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// Rectangular diagonal matrix with `diag` on its main diagonal.
    pub fn diag_rect(rows: usize, cols: usize, diag: &[f64]) -> Self {
        Self::from_fn(rows, cols, |i, j| {
            if i == j && i < diag.len() {
                diag[i]
            } else {
                0.0
            }
        })
    }

    pub fn diag(diag: &[f64]) -> Self {
        Self::diag_rect(diag.len(), diag.len(), diag)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Contiguous block `[r0, r1) x [c0, c1)`.
    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix {
        assert!(r0 < r1 && r1 <= self.rows && c0 < c1 && c1 <= self.cols);
        Self::from_fn(r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j))
    }

    /// First `k` columns.
    pub fn leading_columns(&self, k: usize) -> Matrix {
        self.submatrix(0, self.rows, 0, k)
    }

    /// Leading principal `k x k` block.
    pub fn leading_block(&self, k: usize) -> Matrix {
        self.submatrix(0, k, 0, k)
    }

    pub fn hstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(mismatch(self.shape(), other.shape()));
        }
        let cols = self.cols + other.cols;
        Ok(Self::from_fn(self.rows, cols, |i, j| {
            if j < self.cols {
                self.get(i, j)
            } else {
                other.get(i, j - self.cols)
            }
        }))
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(mismatch(self.shape(), other.shape()));
        }
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let out_row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[p * n..(p + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_raw(m, n, out))
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn tr_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(mismatch(self.shape(), other.shape()));
        }
        let (m, n) = (self.cols, other.cols);
        let mut out = vec![0.0; m * n];
        for p in 0..self.rows {
            let a_row = self.row(p);
            let b_row = other.row(p);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out[i * n..(i + 1) * n].iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_raw(m, n, out))
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: format!("vector of length {}", self.cols),
                got: format!("length {}", x.len()),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `selfᵀ · x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("vector of length {}", self.rows),
                got: format!("length {}", x.len()),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, alpha: f64) -> Matrix {
        self.map(|x| alpha * x)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|&x| f(x)).collect())
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(mismatch(self.shape(), other.shape()));
        }
        Ok(Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub(crate) fn to_faer(&self) -> faer::Mat<f64> {
        faer::Mat::from_fn(self.rows, self.cols, |i, j| self.data[i * self.cols + j])
    }
}

fn mismatch(a: (usize, usize), b: (usize, usize)) -> Error {
    Error::DimensionMismatch {
        expected: format!("compatible with {}x{}", a.0, a.1),
        got: format!("{}x{}", b.0, b.1),
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Euclidean norm of a vector.
pub fn vec_norm(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(Matrix::new(0, 2, vec![]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn products_agree() {
        let a = Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]).unwrap();
        let b = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]).unwrap();
        let ab = a.matmul(&b).unwrap();
        assert_eq!(ab.as_slice(), &[4.0, 5.0, 10.0, 11.0]);
        let atb = a.transpose().tr_matmul(&b).unwrap();
        assert_eq!(atb, ab);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]).unwrap(), vec![6.0, 15.0]);
        assert_eq!(a.tr_matvec(&[1.0, 1.0]).unwrap(), vec![5.0, 7.0, 9.0]);
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn vec_norm_is_scaled() {
        assert_eq!(vec_norm(&[3.0, 4.0]), 5.0);
        assert_eq!(vec_norm(&[0.0, 0.0]), 0.0);
        assert!((vec_norm(&[1e200, 1e200]) - 1e200 * 2f64.sqrt()).abs() < 1e186);
    }
}
