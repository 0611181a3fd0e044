//! Deterministic generators for unit tests, independent of the crate's
//! sampling module so oracle checks do not share code with what they test.

use crate::metric::mat::Mat;

/// SplitMix64; enough randomness for test fixtures, fully deterministic.
pub(crate) struct TestRng(u64);

impl TestRng {
    pub(crate) fn new(seed: u64) -> Self {
        TestRng(seed)
    }

    pub(crate) fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in (-1, 1).
    pub(crate) fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    }
}

pub(crate) fn seeded_mat(rows: usize, cols: usize, seed: u64) -> Mat {
    let mut rng = TestRng::new(seed);
    let entries: Vec<f64> = (0..rows * cols).map(|_| rng.next_f64()).collect();
    Mat::from_rows(rows, cols, &entries).unwrap()
}

/// Random SPD matrix with eigenvalues linearly spaced in [eig_min, eig_max].
pub(crate) fn random_spd(dim: usize, eig_min: f64, eig_max: f64, seed: u64) -> Mat {
    let q = orthonormalize(&seeded_mat(dim, dim, seed));
    let values: Vec<f64> = (0..dim)
        .map(|i| {
            if dim == 1 {
                eig_max
            } else {
                eig_min + (eig_max - eig_min) * i as f64 / (dim - 1) as f64
            }
        })
        .collect();
    (&(&q * &Mat::diagonal(&values)) * &q.transpose()).symmetrized()
}

/// Gram-Schmidt; assumes the input columns are linearly independent, which
/// holds with probability one for the seeded generators above.
fn orthonormalize(a: &Mat) -> Mat {
    let (n, m) = (a.rows(), a.cols());
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    for j in 0..m {
        let mut v = a.col(j);
        for u in &cols {
            let proj: f64 = v.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter_mut().zip(u.iter()) {
                *vi -= proj * ui;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm > 1e-12, "degenerate test fixture");
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        cols.push(v);
    }
    Mat::from_fn(n, m, |i, j| cols[j][i])
}
