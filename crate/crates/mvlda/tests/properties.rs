//! Property tests for the crate's structural invariants.

use proptest::prelude::*;

use mvlda::covariance::{EpochSet, Label};
use mvlda::io::{load_bundle, save_epochs};
use mvlda::metric::{kron, matrix_inner, spd_factorize, vec_t, Mat};
use mvlda::wavelet::{dwt_forward, dwt_inverse, select_coefficients, Boundary, WaveletConfig};

fn finite_entries(count: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1e3..1e3f64, count)
}

/// An SPD matrix built as G G'/dim + I from arbitrary finite entries.
fn spd_from_entries(dim: usize, entries: &[f64]) -> Mat {
    let g = Mat::from_rows(dim, dim, entries).unwrap();
    let gram = &g * &g.transpose();
    (&gram.scaled(1.0 / (dim as f64 * 1e3)) + &Mat::identity(dim)).symmetrized()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Tr(X M Y' D) equals the vectorized inner product under D (x) M.
    #[test]
    #[allow(clippy::needless_range_loop)] // explicit dense oracle
    fn inner_product_matches_kronecker_form(
        k in 1usize..5,
        j in 1usize..5,
        seed_entries in finite_entries(2 * 5 * 5 + 2 * 25),
    ) {
        let x = Mat::from_rows(k, j, &seed_entries[..k * j]).unwrap();
        let y = Mat::from_rows(k, j, &seed_entries[25..25 + k * j]).unwrap();
        let m_mat = spd_from_entries(j, &seed_entries[50..50 + j * j]);
        let d_mat = spd_from_entries(k, &seed_entries[50 + 25..50 + 25 + k * k]);
        let m = spd_factorize(&m_mat, 1e-10).unwrap();
        let d = spd_factorize(&d_mat, 1e-10).unwrap();

        let lhs = matrix_inner(&x, &y, &m, &d).unwrap();
        let big = kron(d.matrix(), m.matrix());
        let (vx, vy) = (vec_t(&x), vec_t(&y));
        let mut rhs = 0.0;
        for a in 0..k * j {
            for b in 0..k * j {
                rhs += vx[a] * big.get(a, b) * vy[b];
            }
        }
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    /// Orthogonal DWT: perfect reconstruction and Parseval for any config.
    #[test]
    fn wavelet_roundtrip_and_parseval(
        taps_half in 1usize..=10,
        levels in 1usize..=4,
        signal in proptest::collection::vec(-1e2..1e2f64, 64),
        periodic in any::<bool>(),
    ) {
        let boundary = if periodic { Boundary::Periodic } else { Boundary::ZeroPad };
        let config = WaveletConfig::new(2 * taps_half, levels, boundary, 64).unwrap();
        let coeffs = dwt_forward(&signal, &config).unwrap();
        let norm_in: f64 = signal.iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm_out: f64 = coeffs.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((norm_out - norm_in).abs() <= 1e-12 * norm_in.max(1.0));
        let back = dwt_inverse(&coeffs, &config).unwrap();
        for (a, b) in signal.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-10 * norm_in.max(1.0));
        }
    }

    /// Selection depends only on absolute values and not on trial order.
    #[test]
    fn selection_sign_and_order_invariance(
        a in proptest::collection::vec(-10.0..10.0f64, 12),
        b in proptest::collection::vec(-10.0..10.0f64, 12),
    ) {
        let mask_ab = select_coefficients(&[a.clone(), b.clone()]).unwrap();
        let mask_ba = select_coefficients(&[b.clone(), a.clone()]).unwrap();
        prop_assert_eq!(mask_ab.kept_indices(), mask_ba.kept_indices());
        let neg_a: Vec<f64> = a.iter().map(|v| -v).collect();
        let mask_neg = select_coefficients(&[neg_a, b]).unwrap();
        prop_assert_eq!(mask_ab.kept_indices(), mask_neg.kept_indices());
    }

    /// Bundles survive a save/load cycle bit for bit.
    #[test]
    fn bundle_roundtrip_bit_exact(
        k in 1usize..4,
        j in 1usize..4,
        n_half in 1usize..4,
        entries in finite_entries(2 * 3 * 3 * 3),
    ) {
        let per = k * j;
        let mut trials = Vec::new();
        let mut labels = Vec::new();
        for t in 0..2 * n_half {
            let start = (t * per) % (entries.len() - per);
            trials.push(Mat::from_rows(k, j, &entries[start..start + per]).unwrap());
            labels.push(if t < n_half { Label::Class1 } else { Label::Class2 });
        }
        let epochs = EpochSet::new(trials, labels).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("prop");
        save_epochs(&epochs, &base, None, None).unwrap();
        let (loaded, _) = load_bundle(&base).unwrap();
        prop_assert_eq!(loaded.len(), epochs.len());
        for (x, y) in loaded.trials().iter().zip(epochs.trials()) {
            for (a, b) in vec_t(x).iter().zip(vec_t(y).iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
