//! Minimal dense matrix support for the MDP solvers: row-major storage,
//! Cholesky factorization for SPD systems, and sample covariance.

use serde::{Deserialize, Serialize};

use crate::num::Scalar;

use super::MdpError;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows_data: Vec<Vec<T>>) -> Self {
        let rows = rows_data.len();
        let cols = rows_data.first().map_or(0, |r| r.len());
        assert!(rows_data.iter().all(|r| r.len() == cols));
        Self {
            rows,
            cols,
            data: rows_data.into_iter().flatten().collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
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

    pub fn is_valid(&self) -> bool {
        self.data.len() == self.rows * self.cols
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor of an SPD matrix.
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factor a symmetric positive definite matrix; fails when a pivot is
    /// not strictly positive.
    pub fn factor(a: &Matrix<T>) -> Result<Self, MdpError> {
        let n = a.rows();
        if a.cols() != n {
            return Err(MdpError::InvalidParams("matrix must be square".into()));
        }
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a[(i, j)];
                for k in 0..j {
                    sum -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if !(sum > T::zero()) {
                        return Err(MdpError::NotPositiveDefinite);
                    }
                    l[(i, j)] = sum.sqrt();
                } else {
                    l[(i, j)] = sum / l[(j, j)];
                }
            }
        }
        Ok(Self { l })
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        // Forward substitution L y = b.
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let mut sum = b[i];
            for k in 0..i {
                sum -= self.l[(i, k)] * y[k];
            }
            y[i] = sum / self.l[(i, i)];
        }
        // Back substitution L' x = y.
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in i + 1..n {
                sum -= self.l[(k, i)] * x[k];
            }
            x[i] = sum / self.l[(i, i)];
        }
        x
    }

    /// Dense inverse of the factored matrix.
    pub fn inverse(&self) -> Matrix<T> {
        let n = self.l.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
            e[j] = T::zero();
        }
        inv
    }
}

/// Unbiased sample covariance of row vectors (denominator `len - 1`).
pub fn covariance<T: Scalar>(samples: &[Vec<T>]) -> Matrix<T> {
    let t = samples.len();
    assert!(t >= 2, "covariance needs at least two samples");
    let n = samples[0].len();
    let tf = T::from_usize(t).unwrap();
    let mut mean = vec![T::zero(); n];
    for s in samples {
        for (m, &v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= tf;
    }
    let mut cov = Matrix::zeros(n, n);
    for s in samples {
        for i in 0..n {
            let di = s[i] - mean[i];
            for j in 0..n {
                cov[(i, j)] += di * (s[j] - mean[j]);
            }
        }
    }
    let denom = T::from_usize(t - 1).unwrap();
    for i in 0..n {
        for j in 0..n {
            cov[(i, j)] /= denom;
        }
    }
    cov
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).fold(T::zero(), |s, v| s + v)
}
