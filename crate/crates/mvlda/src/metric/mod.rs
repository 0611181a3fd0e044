//! Dense matrix kernels parameterized by SPD metrics: inner products,
//! Kronecker products, SPD factorizations and the metric SVD.

mod mat;
mod ops;
mod spd;

#[cfg(test)]
pub(crate) mod test_support;

pub use mat::{kron, unvec_t, vec_t, Mat};
pub use ops::{default_rank_tol, matrix_inner, metric_svd, MetricSvd};
pub use spd::{spd_factorize, SpdFactor, DEFAULT_FLOOR_RATIO, SYMMETRY_TOL};

pub(crate) use spd::sorted_symmetric_eigen;
