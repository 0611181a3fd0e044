//! The discriminant model: metric SVD of the class-mean difference under the
//! Mahalanobis metrics, plus projections, the eigenvalue decomposition of the
//! Mahalanobis distance, approximation errors and row/column coordinates.

use crate::covariance::{class_means, EpochSet, SeparableCovariance};
use crate::error::{Error, Result};
use crate::metric::{matrix_inner, metric_svd, Mat, SpdFactor};

/// Fitted discriminant decomposition of `mean1 - mean2`.
///
/// The metrics are `metric_m = s_r^{-1}` on row space and `metric_d =
/// s_l^{-1}` on column space. The bases satisfy `u' metric_d u = I_Q`,
/// `v' metric_m v = I_Q` and `mean1 - mean2 = sum_q sqrt(lambda_q) u_q v_q'`.
/// Immutable after fit; all operations on it are pure.
#[derive(Debug, Clone)]
pub struct DiscriminantModel {
    mean1: Mat,
    mean2: Mat,
    metric_m: SpdFactor,
    metric_d: SpdFactor,
    u: Mat,
    v: Mat,
    lambda: Vec<f64>,
    n1: usize,
    n2: usize,
}

impl DiscriminantModel {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        mean1: Mat,
        mean2: Mat,
        metric_m: SpdFactor,
        metric_d: SpdFactor,
        u: Mat,
        v: Mat,
        lambda: Vec<f64>,
        n1: usize,
        n2: usize,
    ) -> Result<Self> {
        let (k, j) = (mean1.rows(), mean1.cols());
        let q = lambda.len();
        if mean2.rows() != k
            || mean2.cols() != j
            || metric_m.dim() != j
            || metric_d.dim() != k
            || u.rows() != k
            || u.cols() != q
            || v.rows() != j
            || v.cols() != q
        {
            return Err(Error::DimensionMismatch {
                context: "inconsistent discriminant model fields".into(),
            });
        }
        if lambda.windows(2).any(|w| w[0] < w[1]) || lambda.iter().any(|&l| !l.is_finite() || l <= 0.0) {
            return Err(Error::CorruptedModel {
                context: "eigenvalues must be positive and non-increasing".into(),
            });
        }
        Ok(DiscriminantModel {
            mean1,
            mean2,
            metric_m,
            metric_d,
            u,
            v,
            lambda,
            n1,
            n2,
        })
    }

    pub fn k(&self) -> usize {
        self.mean1.rows()
    }

    pub fn j(&self) -> usize {
        self.mean1.cols()
    }

    /// Number of retained discriminant directions.
    pub fn q(&self) -> usize {
        self.lambda.len()
    }

    pub fn mean1(&self) -> &Mat {
        &self.mean1
    }

    pub fn mean2(&self) -> &Mat {
        &self.mean2
    }

    pub fn delta(&self) -> Mat {
        &self.mean1 - &self.mean2
    }

    pub fn metric_m(&self) -> &SpdFactor {
        &self.metric_m
    }

    pub fn metric_d(&self) -> &SpdFactor {
        &self.metric_d
    }

    pub fn u(&self) -> &Mat {
        &self.u
    }

    pub fn v(&self) -> &Mat {
        &self.v
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    fn check_observation(&self, x: &Mat) -> Result<()> {
        if x.rows() != self.k() || x.cols() != self.j() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "observation is {}x{} but the model is {}x{}",
                    x.rows(),
                    x.cols(),
                    self.k(),
                    self.j()
                ),
            });
        }
        Ok(())
    }

    fn check_rank(&self, r: usize) -> Result<()> {
        if r > self.q() {
            return Err(Error::AxisOutOfRange {
                axis: r,
                q: self.q(),
            });
        }
        Ok(())
    }
}

/// Fits the discriminant model: class means, metrics from the inverted
/// covariance factors, and the metric SVD of the mean difference.
pub fn fit(epochs: &EpochSet, cov: &SeparableCovariance, rank_tol: f64) -> Result<DiscriminantModel> {
    if epochs.k() != cov.k() || epochs.j() != cov.j() {
        return Err(Error::DimensionMismatch {
            context: format!(
                "epochs are {}x{} but covariance factors are {}x{}",
                epochs.k(),
                epochs.j(),
                cov.k(),
                cov.j()
            ),
        });
    }
    let (mean1, mean2, n1, n2) = class_means(epochs);
    let metric_m = cov.s_r().invert();
    let metric_d = cov.s_l().invert();
    let delta = &mean1 - &mean2;
    let svd = metric_svd(&delta, &metric_m, &metric_d, rank_tol)?;
    DiscriminantModel::from_parts(
        mean1, mean2, metric_m, metric_d, svd.u, svd.v, svd.lambda, n1, n2,
    )
}

/// Scores of one observation on all Q discriminant axes: component q is
/// `Tr(x M v_q u_q' D)`, the Mahalanobis inner product of `vec_t(x)` with
/// `u_q (x) v_q`, computed in matrix form.
pub fn scores_vec(x: &Mat, model: &DiscriminantModel) -> Result<Vec<f64>> {
    model.check_observation(x)?;
    let w = &(model.metric_d.matrix() * x) * model.metric_m.matrix();
    let q = model.q();
    let mut scores = Vec::with_capacity(q);
    for axis in 0..q {
        let mut acc = 0.0;
        for r in 0..model.k() {
            let u_r = model.u.get(r, axis);
            for c in 0..model.j() {
                acc += u_r * w.get(r, c) * model.v.get(c, axis);
            }
        }
        scores.push(acc);
    }
    Ok(scores)
}

/// The eigenvalues and their sum, the squared Mahalanobis distance between
/// the class means. Cross-checks the sum against the direct metric norm of
/// the mean difference and reports a corrupted model beyond 1e-8 relative.
pub fn mahalanobis_decomposition(model: &DiscriminantModel) -> Result<(Vec<f64>, f64)> {
    let total: f64 = model.lambda.iter().sum();
    let delta = model.delta();
    let direct = matrix_inner(&delta, &delta, &model.metric_m, &model.metric_d)?;
    let scale = total.abs().max(direct.abs()).max(f64::MIN_POSITIVE);
    if (total - direct).abs() > 1e-8 * scale {
        return Err(Error::CorruptedModel {
            context: format!(
                "eigenvalue sum {total:.17e} disagrees with the direct Mahalanobis distance {direct:.17e}"
            ),
        });
    }
    Ok((model.lambda.clone(), total))
}

/// Tail sum `sum_{q > r} lambda_q`: the squared Mahalanobis norm of the
/// residual after projecting the mean difference on the first r axes.
pub fn approx_error(model: &DiscriminantModel, r: usize) -> Result<f64> {
    model.check_rank(r)?;
    Ok(model.lambda[r..].iter().sum())
}

/// Rank-r reconstruction `sum_{q <= r} sqrt(lambda_q) u_q v_q'`.
pub fn rank_r_reconstruct(model: &DiscriminantModel, r: usize) -> Result<Mat> {
    model.check_rank(r)?;
    let mut acc = Mat::zeros(model.k(), model.j());
    for q in 0..r {
        let s = model.lambda[q].sqrt();
        let term = Mat::from_fn(model.k(), model.j(), |i, c| {
            s * model.u.get(i, q) * model.v.get(c, q)
        });
        acc = &acc + &term;
    }
    Ok(acc)
}

/// Coordinates of the K rows of `x` on the axes v_q: column q is `x M v_q`.
pub fn row_coordinates(x: &Mat, model: &DiscriminantModel) -> Result<Mat> {
    model.check_observation(x)?;
    Ok(&(x * model.metric_m.matrix()) * &model.v)
}

/// Coordinates of the J columns of `x` on the axes u_q: column q is
/// `x' D u_q`.
pub fn col_coordinates(x: &Mat, model: &DiscriminantModel) -> Result<Mat> {
    model.check_observation(x)?;
    Ok(&(&x.transpose() * model.metric_d.matrix()) * &model.u)
}
