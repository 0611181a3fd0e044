//! Ground-truth machinery: a seeded matrix-normal sampler with separable
//! covariance and a dense brute-force discriminant oracle.
//!
//! Sampling is a single deterministic ChaCha8 stream per seed; identical
//! seeds give identical epoch sets bit for bit on a given platform. The
//! oracle vectorizes everything, forms the full KJ x KJ covariance and its
//! inverse square root explicitly, and recovers the eigenvalues from the
//! plain SVD of the whitened, reshaped mean difference; it shares no code
//! with the per-factor whitening path it is used to check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::covariance::{flip_flop, EpochSet, FlipFlopConfig, Label};
use crate::discriminant::fit;
use crate::error::{Error, Result};
use crate::metric::{
    default_rank_tol, kron, metric_svd, spd_factorize, unvec_t, vec_t, Mat, SpdFactor,
};

/// Identifies the random stream so bundles can record their provenance.
pub const GENERATOR_ID: &str = "chacha8+standard-normal-f64";

/// Specification of a two-class matrix-normal population.
#[derive(Debug, Clone)]
pub struct MatrixNormalSpec {
    mu1: Mat,
    mu2: Mat,
    sigma_l: SpdFactor,
    sigma_r: SpdFactor,
    n1: usize,
    n2: usize,
    seed: u64,
}

impl MatrixNormalSpec {
    /// Validates dimensions and the canonical identifiable form
    /// `||sigma_r||_F = 1`.
    pub fn new(
        mu1: Mat,
        mu2: Mat,
        sigma_l: SpdFactor,
        sigma_r: SpdFactor,
        n1: usize,
        n2: usize,
        seed: u64,
    ) -> Result<Self> {
        let (k, j) = (mu1.rows(), mu1.cols());
        if mu2.rows() != k || mu2.cols() != j || sigma_l.dim() != k || sigma_r.dim() != j {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "means are {k}x{j} but factors are {}x{} and {}x{}",
                    sigma_l.dim(),
                    sigma_l.dim(),
                    sigma_r.dim(),
                    sigma_r.dim()
                ),
            });
        }
        if n1 < 1 || n2 < 1 {
            return Err(Error::InvalidArgument {
                context: format!("class sizes must be at least 1, got n1={n1}, n2={n2}"),
            });
        }
        let norm = sigma_r.matrix().frobenius_norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument {
                context: format!(
                    "sigma_r must have unit Frobenius norm (canonical form), got {norm}"
                ),
            });
        }
        Ok(MatrixNormalSpec {
            mu1,
            mu2,
            sigma_l,
            sigma_r,
            n1,
            n2,
            seed,
        })
    }

    /// Builds a spec from raw SPD factor matrices, absorbing the column
    /// factor's norm into the row factor so the Kronecker product is kept.
    pub fn from_raw_factors(
        mu1: Mat,
        mu2: Mat,
        sigma_l: &Mat,
        sigma_r: &Mat,
        n1: usize,
        n2: usize,
        seed: u64,
    ) -> Result<Self> {
        let (l, r) = canonical_factor_pair(sigma_l, sigma_r)?;
        MatrixNormalSpec::new(mu1, mu2, l, r, n1, n2, seed)
    }

    pub fn k(&self) -> usize {
        self.mu1.rows()
    }

    pub fn j(&self) -> usize {
        self.mu1.cols()
    }

    pub fn mu1(&self) -> &Mat {
        &self.mu1
    }

    pub fn mu2(&self) -> &Mat {
        &self.mu2
    }

    pub fn sigma_l(&self) -> &SpdFactor {
        &self.sigma_l
    }

    pub fn sigma_r(&self) -> &SpdFactor {
        &self.sigma_r
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Factorizes a raw SPD pair and rescales it onto the identifiable manifold:
/// `||sigma_r||_F = 1` with the scale absorbed into `sigma_l`.
pub fn canonical_factor_pair(sigma_l: &Mat, sigma_r: &Mat) -> Result<(SpdFactor, SpdFactor)> {
    let l = spd_factorize(sigma_l, 0.0)?;
    let r = spd_factorize(sigma_r, 0.0)?;
    let scale = r.matrix().frobenius_norm();
    Ok((l.scaled(scale)?, r.scaled(1.0 / scale)?))
}

/// Draws `n1 + n2` trials: trial of class c is
/// `mu_c + sqrt(sigma_l) Z sqrt(sigma_r)` with Z standard normal, so the
/// covariance of `vec_t(X)` is `sigma_l (x) sigma_r`. Class 1 trials come
/// first; the noise matrices are filled in row-major order from one stream.
pub fn sample_matrix_normal(spec: &MatrixNormalSpec) -> EpochSet {
    let (k, j) = (spec.k(), spec.j());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut trials = Vec::with_capacity(spec.n1 + spec.n2);
    let mut labels = Vec::with_capacity(spec.n1 + spec.n2);
    for (mean, count, label) in [
        (&spec.mu1, spec.n1, Label::Class1),
        (&spec.mu2, spec.n2, Label::Class2),
    ] {
        for _ in 0..count {
            let mut noise = Vec::with_capacity(k * j);
            for _ in 0..k * j {
                noise.push(rng.sample::<f64, _>(StandardNormal));
            }
            let z = Mat::from_rows(k, j, &noise).expect("normal draws are finite");
            let x = mean + &(&(spec.sigma_l.sqrt() * &z) * spec.sigma_r.sqrt());
            trials.push(x);
            labels.push(label);
        }
    }
    EpochSet::new(trials, labels).expect("spec guarantees a valid epoch set")
}

/// Draws `count` columns orthonormal under the given metric: Gram-Schmidt of
/// standard normal vectors in the metric inner product.
pub fn metric_orthonormal_directions(
    dim: usize,
    count: usize,
    metric: &SpdFactor,
    rng: &mut impl Rng,
) -> Result<Mat> {
    if count > dim || metric.dim() != dim {
        return Err(Error::InvalidArgument {
            context: format!("cannot draw {count} orthonormal directions in dimension {dim}"),
        });
    }
    let m = metric.matrix();
    let ip = |a: &[f64], b: &[f64]| -> f64 {
        let mut acc = 0.0;
        for (r, &ar) in a.iter().enumerate() {
            for (c, &bc) in b.iter().enumerate() {
                acc += ar * m.get(r, c) * bc;
            }
        }
        acc
    };
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(count);
    while columns.len() < count {
        let mut v: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        for u in &columns {
            let proj = ip(&v, u);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = ip(&v, &v).sqrt();
        if norm < 1e-8 {
            continue; // essentially dependent draw; redraw
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        columns.push(v);
    }
    Ok(Mat::from_fn(dim, count, |i, c| columns[c][i]))
}

/// Random SPD matrix with eigenvalues spread over [eig_min, eig_max], drawn
/// from the supplied stream.
pub fn random_spd(dim: usize, eig_min: f64, eig_max: f64, rng: &mut impl Rng) -> Result<Mat> {
    if !(eig_min > 0.0 && eig_max >= eig_min) {
        return Err(Error::InvalidArgument {
            context: format!("need 0 < eig_min <= eig_max, got [{eig_min}, {eig_max}]"),
        });
    }
    let basis = metric_orthonormal_directions(dim, dim, &SpdFactor::identity(dim), rng)?;
    let values: Vec<f64> = (0..dim)
        .map(|i| {
            if dim == 1 {
                eig_max
            } else {
                eig_min + (eig_max - eig_min) * i as f64 / (dim - 1) as f64
            }
        })
        .collect();
    Ok((&(&basis * &Mat::diagonal(&values)) * &basis.transpose()).symmetrized())
}

/// Everything the dense oracle produces.
#[derive(Debug, Clone)]
pub struct BruteForceDiscriminant {
    /// Descending positive eigenvalues.
    pub lambda: Vec<f64>,
    /// The corresponding KJ-space axes `u_q (x) v_q`, orthonormal under the
    /// inverse assembled covariance.
    pub axes: Vec<Vec<f64>>,
    /// Squared Mahalanobis distance between the class means.
    pub total: f64,
}

/// Maximum vectorized dimension the dense oracle accepts.
pub const BRUTE_FORCE_MAX_DIM: usize = 400;

/// Dense reference computation of the discriminant eigenvalues.
///
/// Estimates the separable covariance with default flip-flop settings, forms
/// the full KJ x KJ matrix and its inverse square root from one dense
/// symmetric eigendecomposition, whitens `vec_t(mean1 - mean2)`, reshapes it
/// to K x J, and reads the eigenvalues off the plain SVD.
pub fn brute_force_discriminant(epochs: &EpochSet) -> Result<BruteForceDiscriminant> {
    let (k, j) = (epochs.k(), epochs.j());
    let dim = k * j;
    if dim > BRUTE_FORCE_MAX_DIM {
        return Err(Error::InvalidArgument {
            context: format!(
                "dense path limited to K*J <= {BRUTE_FORCE_MAX_DIM}, got {k}*{j} = {dim}"
            ),
        });
    }
    let cov = flip_flop(epochs, &FlipFlopConfig::default())?;
    let full = kron(cov.s_l().matrix(), cov.s_r().matrix());
    let full_factor = spd_factorize(&full, 0.0)?;

    let (mean1, mean2, _, _) = crate::covariance::class_means(epochs);
    let delta_vec = vec_t(&(&mean1 - &mean2));
    let delta_col = Mat::from_rows(dim, 1, &delta_vec)?;

    let whitened = full_factor.inv_sqrt() * &delta_col;
    let total = {
        let pulled = full_factor.inverse() * &delta_col;
        let mut acc = 0.0;
        for (i, &dv) in delta_vec.iter().enumerate() {
            acc += dv * pulled.get(i, 0);
        }
        acc
    };

    // plain SVD of the reshaped whitened difference via identity metrics
    let w_mat = unvec_t(&whitened.col(0), k, j)?;
    let svd = metric_svd(
        &w_mat,
        &SpdFactor::identity(j),
        &SpdFactor::identity(k),
        default_rank_tol(k, j),
    )?;

    let mut axes = Vec::with_capacity(svd.lambda.len());
    for q in 0..svd.lambda.len() {
        // kron of the whitened singular vectors, mapped back by the dense
        // square root: S_W^{1/2} (u~ (x) v~)
        let uq = svd.u.col(q);
        let vq = svd.v.col(q);
        let mut kron_vec = Vec::with_capacity(dim);
        for &uu in &uq {
            for &vv in &vq {
                kron_vec.push(uu * vv);
            }
        }
        let col = Mat::from_rows(dim, 1, &kron_vec)?;
        axes.push((full_factor.sqrt() * &col).col(0));
    }

    Ok(BruteForceDiscriminant {
        lambda: svd.lambda,
        axes,
        total,
    })
}

/// Convenience used by tests and the CLI: fit the main path with default
/// settings.
pub fn fit_default(epochs: &EpochSet) -> Result<crate::discriminant::DiscriminantModel> {
    let cov = flip_flop(epochs, &FlipFlopConfig::default())?;
    fit(epochs, &cov, default_rank_tol(epochs.k(), epochs.j()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::matrix_inner;

    fn canonical_spec(k: usize, j: usize, n1: usize, n2: usize, seed: u64) -> MatrixNormalSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
        let sigma_l = random_spd(k, 0.5, 2.0, &mut rng).unwrap();
        let sigma_r = random_spd(j, 0.5, 2.0, &mut rng).unwrap();
        let mu1 = Mat::from_fn(k, j, |i, c| 0.3 * (i as f64) - 0.2 * (c as f64));
        let mu2 = Mat::zeros(k, j);
        MatrixNormalSpec::from_raw_factors(mu1, mu2, &sigma_l, &sigma_r, n1, n2, seed).unwrap()
    }

    #[test]
    fn sampler_is_deterministic() {
        let spec = canonical_spec(2, 3, 4, 5, 42);
        let a = sample_matrix_normal(&spec);
        let b = sample_matrix_normal(&spec);
        assert_eq!(a.len(), 9);
        for (x, y) in a.trials().iter().zip(b.trials()) {
            assert_eq!(x, y);
        }
        let other = canonical_spec(2, 3, 4, 5, 43);
        let c = sample_matrix_normal(&other);
        assert!(a.trials()[0] != c.trials()[0]);
    }

    #[test]
    fn sampler_identity_factors_have_unit_entry_variance() {
        // canonical identity pair: sigma_r = I/sqrt(J), sigma_l = sqrt(J) I,
        // so each entry of X has variance 1
        let j = 4;
        let spec = MatrixNormalSpec::from_raw_factors(
            Mat::zeros(3, j),
            Mat::zeros(3, j),
            &Mat::identity(3),
            &Mat::identity(j),
            4000,
            1,
            7,
        )
        .unwrap();
        let epochs = sample_matrix_normal(&spec);
        let mut acc = 0.0;
        let mut count = 0.0;
        for t in epochs.class_trials(Label::Class1) {
            for v in vec_t(t) {
                acc += v * v;
                count += 1.0;
            }
        }
        let var = acc / count;
        assert!((var - 1.0).abs() < 0.05, "empirical variance {var}");
    }

    #[test]
    fn sampler_empirical_covariance_matches_kronecker() {
        let spec = canonical_spec(2, 2, 50_000, 1, 11);
        let epochs = sample_matrix_normal(&spec);
        let dim = 4;
        let mut mean = vec![0.0; dim];
        let samples: Vec<Vec<f64>> = epochs
            .class_trials(Label::Class1)
            .map(vec_t)
            .collect();
        let n = samples.len() as f64;
        for s in &samples {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v / n;
            }
        }
        let mut emp = Mat::zeros(dim, dim);
        for s in &samples {
            let centered: Vec<f64> = s.iter().zip(&mean).map(|(a, b)| a - b).collect();
            let outer = Mat::from_fn(dim, dim, |i, j| centered[i] * centered[j]);
            emp = &emp + &outer;
        }
        emp = emp.scaled(1.0 / n);
        let truth = kron(spec.sigma_l().matrix(), spec.sigma_r().matrix());
        let rel = (&emp - &truth).frobenius_norm() / truth.frobenius_norm();
        assert!(rel < 0.02, "relative covariance error {rel}");
    }

    #[test]
    fn sampler_linear_transform_property() {
        // samples of A X B' have the moments of the (A Sl A', B Sr B') model
        let k = 2;
        let j = 2;
        let spec = canonical_spec(k, j, 10_000, 1, 13);
        let a = Mat::from_rows(2, 2, &[1.0, 0.5, -0.3, 2.0]).unwrap();
        let b = Mat::from_rows(2, 2, &[0.7, -0.2, 0.4, 1.1]).unwrap();

        let transformed: Vec<Vec<f64>> = sample_matrix_normal(&spec)
            .class_trials(Label::Class1)
            .map(|x| vec_t(&(&(&a * x) * &b.transpose())))
            .collect();

        // first moment: A mu1 B'
        let expected_mean = vec_t(&(&(&a * spec.mu1()) * &b.transpose()));
        let n = transformed.len() as f64;
        let mut mean = vec![0.0; 4];
        for s in &transformed {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v / n;
            }
        }
        let mean_scale = expected_mean.iter().map(|v| v.abs()).fold(0.1, f64::max);
        for (e, m) in expected_mean.iter().zip(&mean) {
            assert!((e - m).abs() < 0.05 * mean_scale.max(1.0), "{e} vs {m}");
        }

        // second moment: (A Sl A') (x) (B Sr B')
        let target_l = &(&a * spec.sigma_l().matrix()) * &a.transpose();
        let target_r = &(&b * spec.sigma_r().matrix()) * &b.transpose();
        let truth = kron(&target_l, &target_r);
        let mut emp = Mat::zeros(4, 4);
        for s in &transformed {
            let centered: Vec<f64> = s.iter().zip(&mean).map(|(x, m)| x - m).collect();
            emp = &emp + &Mat::from_fn(4, 4, |i, j| centered[i] * centered[j]);
        }
        emp = emp.scaled(1.0 / n);
        let rel = (&emp - &truth).frobenius_norm() / truth.frobenius_norm();
        assert!(rel < 0.05, "relative second-moment error {rel}");
    }

    #[test]
    fn brute_force_scalar_case() {
        let trials = vec![
            Mat::from_rows(1, 1, &[10.0]).unwrap(),
            Mat::from_rows(1, 1, &[12.0]).unwrap(),
            Mat::from_rows(1, 1, &[0.0]).unwrap(),
            Mat::from_rows(1, 1, &[2.0]).unwrap(),
        ];
        let labels = vec![Label::Class1, Label::Class1, Label::Class2, Label::Class2];
        let epochs = EpochSet::new(trials, labels).unwrap();
        let oracle = brute_force_discriminant(&epochs).unwrap();
        assert_eq!(oracle.lambda.len(), 1);
        assert!((oracle.lambda[0] - 100.0).abs() < 1e-9);
        assert!((oracle.total - 100.0).abs() < 1e-9);
    }

    #[test]
    fn brute_force_equal_means() {
        let trials = vec![
            Mat::from_rows(1, 2, &[1.0, 0.0]).unwrap(),
            Mat::from_rows(1, 2, &[-1.0, 0.0]).unwrap(),
            Mat::from_rows(1, 2, &[0.0, 1.0]).unwrap(),
            Mat::from_rows(1, 2, &[0.0, -1.0]).unwrap(),
        ];
        let labels = vec![Label::Class1, Label::Class1, Label::Class2, Label::Class2];
        let epochs = EpochSet::new(trials, labels).unwrap();
        let oracle = brute_force_discriminant(&epochs).unwrap();
        assert!(oracle.lambda.is_empty());
        assert!(oracle.total.abs() < 1e-20);
    }

    #[test]
    fn brute_force_matches_main_path() {
        let spec = canonical_spec(3, 4, 20, 20, 17);
        let epochs = sample_matrix_normal(&spec);
        let oracle = brute_force_discriminant(&epochs).unwrap();
        let model = fit_default(&epochs).unwrap();
        assert_eq!(oracle.lambda.len(), model.q());
        for (a, b) in oracle.lambda.iter().zip(model.lambda()) {
            assert!((a - b).abs() < 1e-9 * b.max(1.0), "{a} vs {b}");
        }
        let delta = model.delta();
        let inner = matrix_inner(&delta, &delta, model.metric_m(), model.metric_d()).unwrap();
        assert!((oracle.total - inner).abs() < 1e-9 * inner.max(1.0));
    }

    #[test]
    fn brute_force_axes_reconstruct_delta() {
        let spec = canonical_spec(2, 3, 15, 15, 19);
        let epochs = sample_matrix_normal(&spec);
        let oracle = brute_force_discriminant(&epochs).unwrap();
        let (mean1, mean2, _, _) = crate::covariance::class_means(&epochs);
        let dv = vec_t(&(&mean1 - &mean2));
        let mut rebuilt = vec![0.0; dv.len()];
        for (lambda, axis) in oracle.lambda.iter().zip(&oracle.axes) {
            for (r, a) in rebuilt.iter_mut().zip(axis) {
                *r += lambda.sqrt() * a;
            }
        }
        let err: f64 = dv
            .iter()
            .zip(&rebuilt)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = dv.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err < 1e-9 * norm);
    }

    #[test]
    fn brute_force_rejects_large_problems() {
        // a 2-trial set with K*J = 420 just to hit the guard
        let trials = vec![Mat::zeros(20, 21), Mat::from_fn(20, 21, |i, j| (i + j) as f64)];
        let labels = vec![Label::Class1, Label::Class2];
        let epochs = EpochSet::new(trials, labels).unwrap();
        let err = brute_force_discriminant(&epochs).unwrap_err();
        assert_eq!(err.code(), "invalid-argument");
    }

    #[test]
    fn planted_directions_are_metric_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let metric = spd_factorize(&random_spd(5, 0.5, 2.0, &mut rng).unwrap(), 1e-12).unwrap();
        let dirs = metric_orthonormal_directions(5, 3, &metric, &mut rng).unwrap();
        let gram = &(&dirs.transpose() * metric.matrix()) * &dirs;
        assert!((&gram - &Mat::identity(3)).max_abs() < 1e-10);
        assert!(metric_orthonormal_directions(3, 4, &metric, &mut rng).is_err());
    }
}
