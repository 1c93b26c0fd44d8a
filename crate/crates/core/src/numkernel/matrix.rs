use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major data; `data.len()` must equal
    /// `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix data length",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    context: "row length",
                    expected: c,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix<T> {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matrix product inner dimension",
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `self * v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                actual: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a * b)
                    .sum::<T>()
            })
            .collect())
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|&x| x * x)
            .sum::<T>()
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Symmetric matrix with finite entries.
///
/// Construction validates symmetry to a relative tolerance of `1e-12` (with
/// respect to the largest absolute entry) and then stores the exactly
/// symmetrized average `(A + A')/2`, so downstream kernels can rely on
/// `a_ij == a_ji` bitwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix<T>(Matrix<T>);

const SYMMETRY_RTOL: f64 = 1e-12;

impl<T: Real> SymMatrix<T> {
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch {
                context: "symmetric matrix shape",
                expected: m.rows(),
                actual: m.cols(),
            });
        }
        if m.rows() == 0 {
            return Err(Error::EmptyInput("symmetric matrix dimension"));
        }
        if !m.is_finite() {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        let scale = m.max_abs().as_f64().max(1.0);
        let mut max_asymmetry = 0.0f64;
        for i in 0..m.rows() {
            for j in (i + 1)..m.cols() {
                let d = (m[(i, j)] - m[(j, i)]).abs().as_f64();
                max_asymmetry = max_asymmetry.max(d);
            }
        }
        if max_asymmetry > SYMMETRY_RTOL * scale {
            return Err(Error::NotSymmetric { max_asymmetry });
        }
        let mut sym = m;
        let half = T::of(0.5);
        for i in 0..sym.rows() {
            for j in (i + 1)..sym.cols() {
                let avg = (sym[(i, j)] + sym[(j, i)]) * half;
                sym[(i, j)] = avg;
                sym[(j, i)] = avg;
            }
        }
        Ok(SymMatrix(sym))
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Diagonal matrix with the given entries.
    pub fn from_diag(diag: &[T]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::EmptyInput("diagonal"));
        }
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim()).map(|i| self.0[(i, i)]).collect()
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.0
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for SymMatrix<T> {
    type Output = T;

    fn index(&self, idx: (usize, usize)) -> &T {
        &self.0[idx]
    }
}
