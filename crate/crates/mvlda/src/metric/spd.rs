//! Symmetric positive definite factorizations.
//!
//! An [`SpdFactor`] carries a validated SPD matrix together with its inverse,
//! symmetric square root and inverse square root, all derived from one
//! symmetric eigendecomposition. Eigenvalues below `floor_ratio * lambda_max`
//! are raised to that floor first; metrics in this crate are inverses of
//! estimated covariances and may be near singular for small samples.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::metric::mat::Mat;

/// Relative asymmetry above which a matrix is rejected as non-symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Default eigenvalue floor, as a fraction of the largest eigenvalue.
pub const DEFAULT_FLOOR_RATIO: f64 = 1e-10;

/// An SPD matrix with cached inverse, square root and inverse square root.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    matrix: Mat,
    inverse: Mat,
    sqrt: Mat,
    inv_sqrt: Mat,
    /// Eigenvalues after flooring, in descending order.
    eigenvalues: Vec<f64>,
    eigen_floor: f64,
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn inverse(&self) -> &Mat {
        &self.inverse
    }

    pub fn sqrt(&self) -> &Mat {
        &self.sqrt
    }

    pub fn inv_sqrt(&self) -> &Mat {
        &self.inv_sqrt
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigen_floor(&self) -> f64 {
        self.eigen_floor
    }

    pub fn log_det(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.ln()).sum()
    }

    pub fn identity(dim: usize) -> SpdFactor {
        SpdFactor {
            matrix: Mat::identity(dim),
            inverse: Mat::identity(dim),
            sqrt: Mat::identity(dim),
            inv_sqrt: Mat::identity(dim),
            eigenvalues: vec![1.0; dim],
            eigen_floor: 1.0,
        }
    }

    /// Factorization of the inverse matrix, reusing the cached pieces.
    pub fn invert(&self) -> SpdFactor {
        let mut eigenvalues: Vec<f64> = self.eigenvalues.iter().rev().map(|l| 1.0 / l).collect();
        // guard against rounding breaking the descending order on near-ties
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let eigen_floor = eigenvalues.last().copied().unwrap_or(1.0);
        SpdFactor {
            matrix: self.inverse.clone(),
            inverse: self.matrix.clone(),
            sqrt: self.inv_sqrt.clone(),
            inv_sqrt: self.sqrt.clone(),
            eigenvalues,
            eigen_floor,
        }
    }

    /// The factorization of `factor * matrix` for `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<SpdFactor> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidArgument {
                context: format!("scale factor must be finite and positive, got {factor}"),
            });
        }
        let root = factor.sqrt();
        Ok(SpdFactor {
            matrix: self.matrix.scaled(factor),
            inverse: self.inverse.scaled(1.0 / factor),
            sqrt: self.sqrt.scaled(root),
            inv_sqrt: self.inv_sqrt.scaled(1.0 / root),
            eigenvalues: self.eigenvalues.iter().map(|l| l * factor).collect(),
            eigen_floor: self.eigen_floor * factor,
        })
    }
}

/// Symmetric eigendecomposition with eigenpairs sorted by descending value.
///
/// Ties keep the original nalgebra ordering, so the result is deterministic.
pub(crate) fn sorted_symmetric_eigen(a: &Mat) -> Result<(Vec<f64>, Mat)> {
    let eig = SymmetricEigen::try_new(a.inner().clone(), f64::EPSILON, 0).ok_or_else(|| {
        Error::NoConvergence {
            context: format!("symmetric eigendecomposition of a {}x{} matrix", a.rows(), a.cols()),
        }
    })?;
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Mat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// Rebuilds `P diag(f(lambda)) P'`, symmetrized against rounding.
fn rebuild(vectors: &Mat, values: &[f64], f: impl Fn(f64) -> f64) -> Mat {
    let d = Mat::diagonal(&values.iter().map(|&l| f(l)).collect::<Vec<_>>());
    (&(vectors * &d) * &vectors.transpose()).symmetrized()
}

/// Factorizes a symmetric positive (semi-)definite matrix.
///
/// Eigenvalues below `floor_ratio * lambda_max` are raised to that floor and
/// the floored value is recorded. Rejects non-square or asymmetric input and
/// matrices whose largest eigenvalue is not positive.
pub fn spd_factorize(a: &Mat, floor_ratio: f64) -> Result<SpdFactor> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !(floor_ratio.is_finite() && floor_ratio >= 0.0) {
        return Err(Error::InvalidArgument {
            context: format!("floor_ratio must be finite and >= 0, got {floor_ratio}"),
        });
    }
    let asymmetry = a.asymmetry();
    if asymmetry > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let sym = a.symmetrized();
    let (raw_values, vectors) = sorted_symmetric_eigen(&sym)?;
    let lambda_max = raw_values[0];
    if lambda_max.is_nan() || lambda_max <= 0.0 {
        return Err(Error::NotPositiveSemiDefinite { lambda_max });
    }
    let floor = floor_ratio * lambda_max;
    let values: Vec<f64> = raw_values.iter().map(|&l| l.max(floor)).collect();
    let lambda_min = *values.last().unwrap();
    if lambda_min <= 0.0 {
        // only reachable with floor_ratio == 0 and a semi-definite input
        return Err(Error::NotPositiveSemiDefinite { lambda_max: lambda_min });
    }
    Ok(SpdFactor {
        matrix: rebuild(&vectors, &values, |l| l),
        inverse: rebuild(&vectors, &values, |l| 1.0 / l),
        sqrt: rebuild(&vectors, &values, |l| l.sqrt()),
        inv_sqrt: rebuild(&vectors, &values, |l| 1.0 / l.sqrt()),
        eigenvalues: values,
        eigen_floor: floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::test_support::{random_spd, seeded_mat};

    fn assert_close(a: &Mat, b: &Mat, tol: f64) {
        let scale = b.frobenius_norm().max(1.0);
        assert!(
            (a - b).frobenius_norm() <= tol * scale,
            "matrices differ by {:.3e} (tol {:.3e})",
            (a - b).frobenius_norm(),
            tol * scale
        );
    }

    #[test]
    fn identity_case() {
        let f = spd_factorize(&Mat::identity(3), 1e-10).unwrap();
        assert_close(f.sqrt(), &Mat::identity(3), 1e-14);
        assert_close(f.inv_sqrt(), &Mat::identity(3), 1e-14);
        assert_close(f.inverse(), &Mat::identity(3), 1e-14);
    }

    #[test]
    fn diagonal_case() {
        let f = spd_factorize(&Mat::diagonal(&[4.0, 9.0]), 1e-10).unwrap();
        assert_close(f.sqrt(), &Mat::diagonal(&[2.0, 3.0]), 1e-14);
        assert_close(f.inverse(), &Mat::diagonal(&[0.25, 1.0 / 9.0]), 1e-14);
    }

    #[test]
    fn random_spd_roundtrip() {
        let a = random_spd(5, 0.3, 4.0, 11);
        let f = spd_factorize(&a, 1e-10).unwrap();
        let norm = a.frobenius_norm();
        assert!((&(f.sqrt() * f.sqrt()) - &a).frobenius_norm() < 1e-10 * norm);
        assert_close(&(f.inv_sqrt() * f.sqrt()), &Mat::identity(5), 1e-10);
        assert_close(&(f.matrix() * f.inverse()), &Mat::identity(5), 1e-10);
        assert_eq!(f.eigenvalues().len(), 5);
        assert!(f.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn flooring_raises_small_eigenvalues() {
        let a = Mat::diagonal(&[1.0, 1e-16]);
        let f = spd_factorize(&a, 1e-10).unwrap();
        assert!((f.eigen_floor() - 1e-10).abs() < 1e-24);
        assert!(f.eigenvalues().iter().all(|&l| l >= f.eigen_floor()));
        // idempotence above the floor: refactorizing the floored matrix is stable
        let g = spd_factorize(f.matrix(), 1e-10).unwrap();
        assert_close(g.matrix(), f.matrix(), 1e-12);
    }

    #[test]
    fn rejects_asymmetric() {
        let a = Mat::from_rows(2, 2, &[1.0, 0.5, 0.0, 1.0]).unwrap();
        assert_eq!(spd_factorize(&a, 1e-10).unwrap_err().code(), "not-symmetric");
    }

    #[test]
    fn rejects_non_square() {
        let a = Mat::zeros(2, 3);
        assert_eq!(spd_factorize(&a, 1e-10).unwrap_err().code(), "not-square");
    }

    #[test]
    fn rejects_negative_definite() {
        let a = Mat::diagonal(&[-1.0, -2.0]);
        let err = spd_factorize(&a, 1e-10).unwrap_err();
        assert_eq!(err.code(), "not-positive-semi-definite");
    }

    #[test]
    fn invert_swaps_roles() {
        let a = random_spd(4, 0.5, 3.0, 7);
        let f = spd_factorize(&a, 1e-10).unwrap();
        let g = f.invert();
        assert_close(g.matrix(), f.inverse(), 0.0);
        assert_close(&(g.sqrt() * g.sqrt()), g.matrix(), 1e-10);
        assert!((g.log_det() + f.log_det()).abs() < 1e-10);
    }

    #[test]
    fn scaled_factor_is_consistent() {
        let a = random_spd(3, 0.5, 2.0, 3);
        let f = spd_factorize(&a, 1e-10).unwrap();
        let g = f.scaled(4.0).unwrap();
        assert_close(g.matrix(), &a.scaled(4.0), 1e-14);
        assert_close(&(g.sqrt() * g.sqrt()), g.matrix(), 1e-10);
        assert_close(&(g.matrix() * g.inverse()), &Mat::identity(3), 1e-10);
    }

    #[test]
    fn log_det_matches_dense() {
        let a = seeded_mat(4, 4, 5).symmetrized();
        let spd = &(&a * &a.transpose()) + &Mat::identity(4);
        let f = spd_factorize(&spd.symmetrized(), 1e-12).unwrap();
        let det: f64 = f.eigenvalues().iter().product();
        assert!((f.log_det() - det.ln()).abs() < 1e-10);
    }
}
