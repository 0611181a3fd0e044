//! Dense real matrix with a row-major contract.
//!
//! Observations are K x J matrices; their vectorization convention throughout
//! the crate is `vec_t`, the row-major flattening (column-stacking of the
//! transpose). Entry (k, j) of a K x J matrix lands at index k*J + j.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense matrix of finite `f64` entries.
///
/// Construction validates finiteness; arithmetic on validated inputs is
/// assumed to stay finite. Dimension mismatches in operator calls are
/// programmer errors and panic; the fallible public operations of the crate
/// validate dimensions up front and return `Err` instead.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    inner: DMatrix<f64>,
}

impl Mat {
    /// Builds a matrix from row-major entries.
    pub fn from_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "entry buffer has {} values, expected {}x{}={}",
                    entries.len(),
                    rows,
                    cols,
                    rows * cols
                ),
            });
        }
        for (pos, &v) in entries.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    trial: 0,
                    row: pos / cols.max(1),
                    col: pos % cols.max(1),
                });
            }
        }
        Ok(Mat {
            inner: DMatrix::from_row_slice(rows, cols, entries),
        })
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(rows: usize, cols: usize, f: F) -> Self {
        Mat {
            inner: DMatrix::from_fn(rows, cols, f),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Mat {
            inner: DMatrix::identity(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Mat::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub(crate) fn inner(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.inner[(row, col)]
    }

    pub fn transpose(&self) -> Mat {
        Mat {
            inner: self.inner.transpose(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Mat {
        Mat {
            inner: &self.inner * factor,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Row-major entries, i.e. `vec_t(self)`.
    pub fn row_major(&self) -> Vec<f64> {
        let (r, c) = (self.rows(), self.cols());
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    /// Column `j` as a vector.
    pub fn col(&self, j: usize) -> Vec<f64> {
        self.inner.column(j).iter().copied().collect()
    }

    /// Relative asymmetry ||A - A'||_F / ||A||_F (0 for the zero matrix).
    pub fn asymmetry(&self) -> f64 {
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            return 0.0;
        }
        (&self.inner - self.inner.transpose()).norm() / norm
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Exact symmetrization (A + A') / 2.
    pub fn symmetrized(&self) -> Mat {
        Mat {
            inner: (&self.inner + self.inner.transpose()) * 0.5,
        }
    }
}

impl std::ops::Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        Mat {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl std::ops::Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        Mat {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl std::ops::Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(
            self.cols(),
            rhs.rows(),
            "matrix product dimension mismatch: {}x{} * {}x{}",
            self.rows(),
            self.cols(),
            rhs.rows(),
            rhs.cols()
        );
        Mat {
            inner: &self.inner * &rhs.inner,
        }
    }
}

/// Row-major vectorization: `vec(X')`, the column-stacking of the transpose.
///
/// For X in R^{KxJ} the entry (k, j) lands at index k*J + j, so the rows of X
/// are concatenated. This is the convention under which the covariance of a
/// separable matrix-variate observation is `sigma_l (x) sigma_r`.
pub fn vec_t(x: &Mat) -> Vec<f64> {
    x.row_major()
}

/// Reshapes a length K*J vector back into a K x J matrix (inverse of `vec_t`).
pub fn unvec_t(v: &[f64], rows: usize, cols: usize) -> Result<Mat> {
    Mat::from_rows(rows, cols, v)
}

/// Kronecker product; dimensions (rows_a * rows_b) x (cols_a * cols_b).
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ra, ca) = (a.rows(), a.cols());
    let (rb, cb) = (b.rows(), b.cols());
    Mat::from_fn(ra * rb, ca * cb, |i, j| {
        a.get(i / rb, j / cb) * b.get(i % rb, j % cb)
    })
}

#[derive(Serialize, Deserialize)]
struct MatRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Serialize for Mat {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatRepr {
            rows: self.rows(),
            cols: self.cols(),
            data: self.row_major(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Mat {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatRepr::deserialize(deserializer)?;
        Mat::from_rows(repr.rows, repr.cols, &repr.data).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vec_t_is_row_major() {
        let x = Mat::from_rows(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(vec_t(&x), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn vec_t_row_vector_fixed_point() {
        let x = Mat::from_rows(1, 3, &[5.0, -1.0, 2.5]).unwrap();
        assert_eq!(vec_t(&x), vec![5.0, -1.0, 2.5]);
    }

    #[test]
    fn kron_scalar() {
        let a = Mat::from_rows(1, 1, &[2.0]).unwrap();
        let b = Mat::from_rows(1, 1, &[3.0]).unwrap();
        assert_eq!(kron(&a, &b).get(0, 0), 6.0);
    }

    #[test]
    fn kron_identity_blocks() {
        let a = Mat::from_rows(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let k = kron(&Mat::identity(2), &a);
        assert_eq!(k.rows(), 4);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(k.get(i, j), a.get(i, j));
                assert_eq!(k.get(2 + i, 2 + j), a.get(i, j));
                assert_eq!(k.get(i, 2 + j), 0.0);
                assert_eq!(k.get(2 + i, j), 0.0);
            }
        }
    }

    #[test]
    fn kron_mixed_product_matches_dense_oracle() {
        // (A (x) B)(C (x) D) = (AC) (x) (BD), dense multiplication on both sides
        let a = Mat::from_rows(2, 2, &[0.6, -1.2, 0.3, 2.0]).unwrap();
        let b = Mat::from_rows(2, 2, &[1.5, 0.2, -0.7, 0.9]).unwrap();
        let c = Mat::from_rows(2, 2, &[-0.4, 1.1, 2.2, 0.5]).unwrap();
        let d = Mat::from_rows(2, 2, &[0.8, -0.3, 0.1, 1.7]).unwrap();
        let lhs = &kron(&a, &b) * &kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        assert!((&lhs - &rhs).max_abs() < 1e-14);
    }

    #[test]
    fn rejects_non_finite_entries() {
        let err = Mat::from_rows(1, 2, &[1.0, f64::NAN]).unwrap_err();
        assert_eq!(err.code(), "non-finite");
    }

    #[test]
    fn rejects_bad_entry_count() {
        let err = Mat::from_rows(2, 2, &[1.0, 2.0, 3.0]).unwrap_err();
        assert_eq!(err.code(), "dim-mismatch");
    }
}
