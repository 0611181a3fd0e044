//! Metric inner products and the metric singular value decomposition.

use nalgebra::SVD;

use crate::error::{Error, Result};
use crate::metric::mat::Mat;
use crate::metric::spd::SpdFactor;

/// Default numerical-rank threshold relative to the largest singular value.
pub fn default_rank_tol(k: usize, j: usize) -> f64 {
    k.max(j) as f64 * 1e-12
}

fn check_metric_dims(x: &Mat, m: &SpdFactor, d: &SpdFactor) -> Result<()> {
    if m.dim() != x.cols() || d.dim() != x.rows() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "matrix is {}x{} but metrics are M: {}x{}, D: {}x{}",
                x.rows(),
                x.cols(),
                m.dim(),
                m.dim(),
                d.dim(),
                d.dim()
            ),
        });
    }
    Ok(())
}

/// Metric inner product `<X, Y> = Tr(X M Y' D)` of two K x J matrices,
/// where M is the J x J row-space metric and D the K x K column-space metric.
///
/// Equals the Euclidean inner product of `vec_t(X)` and `vec_t(Y)` under the
/// Kronecker metric `D (x) M`.
pub fn matrix_inner(x: &Mat, y: &Mat, m: &SpdFactor, d: &SpdFactor) -> Result<f64> {
    if x.rows() != y.rows() || x.cols() != y.cols() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "operands are {}x{} and {}x{}",
                x.rows(),
                x.cols(),
                y.rows(),
                y.cols()
            ),
        });
    }
    check_metric_dims(x, m, d)?;
    let xm = x * m.matrix();
    let dy = d.matrix() * y;
    // Tr(X M Y' D) as an elementwise sum; fixed row-major order.
    let mut acc = 0.0;
    for i in 0..xm.rows() {
        for j in 0..xm.cols() {
            acc += xm.get(i, j) * dy.get(i, j);
        }
    }
    Ok(acc)
}

/// Result of [`metric_svd`]: `delta = sum_q sqrt(lambda_q) u_q v_q'` with
/// `U' D U = I_Q` and `V' M V = I_Q`.
#[derive(Debug, Clone)]
pub struct MetricSvd {
    /// K x Q, columns D-orthonormal.
    pub u: Mat,
    /// Descending positive eigenvalues (squared metric singular values).
    pub lambda: Vec<f64>,
    /// J x Q, columns M-orthonormal.
    pub v: Mat,
}

/// Singular value decomposition of a K x J matrix under SPD metrics M (rows)
/// and D (columns), computed by whitening: the ordinary SVD of
/// `D^{1/2} delta M^{1/2}` is mapped back through the inverse square roots.
///
/// Q is the number of singular values exceeding `rank_tol` times the largest.
/// Sign convention: in each whitened left singular vector the entry of
/// largest magnitude (lowest index on ties) is made positive.
pub fn metric_svd(delta: &Mat, m: &SpdFactor, d: &SpdFactor, rank_tol: f64) -> Result<MetricSvd> {
    if !(rank_tol.is_finite() && rank_tol > 0.0) {
        return Err(Error::InvalidArgument {
            context: format!("rank_tol must be finite and positive, got {rank_tol}"),
        });
    }
    check_metric_dims(delta, m, d)?;
    let (k, j) = (delta.rows(), delta.cols());

    let b = &(d.sqrt() * delta) * m.sqrt();
    let svd = SVD::try_new(b.inner().clone(), true, true, f64::EPSILON, 0).ok_or_else(|| {
        Error::NoConvergence {
            context: format!("singular value decomposition of a {k}x{j} matrix"),
        }
    })?;
    let sigma = &svd.singular_values;
    let wu = svd.u.as_ref().expect("u requested");
    let wvt = svd.v_t.as_ref().expect("v_t requested");

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap());
    let sigma_max = order.first().map(|&i| sigma[i]).unwrap_or(0.0);
    let rank: Vec<usize> = order
        .into_iter()
        .filter(|&i| sigma[i] > rank_tol * sigma_max)
        .collect();
    let q = rank.len();

    // Whitened singular vectors for the retained directions, with the sign
    // convention applied before un-whitening.
    let mut wu_q = Mat::from_fn(k, q, |r, c| wu[(r, rank[c])]);
    let mut wv_q = Mat::from_fn(j, q, |r, c| wvt[(rank[c], r)]);
    for c in 0..q {
        let mut best = 0;
        for r in 1..k {
            if wu_q.get(r, c).abs() > wu_q.get(best, c).abs() {
                best = r;
            }
        }
        if wu_q.get(best, c) < 0.0 {
            wu_q = flip_column(&wu_q, c);
            wv_q = flip_column(&wv_q, c);
        }
    }

    let lambda: Vec<f64> = rank.iter().map(|&i| sigma[i] * sigma[i]).collect();
    Ok(MetricSvd {
        u: d.inv_sqrt() * &wu_q,
        lambda,
        v: m.inv_sqrt() * &wv_q,
    })
}

fn flip_column(a: &Mat, col: usize) -> Mat {
    Mat::from_fn(a.rows(), a.cols(), |i, j| {
        if j == col {
            -a.get(i, j)
        } else {
            a.get(i, j)
        }
    })
}
