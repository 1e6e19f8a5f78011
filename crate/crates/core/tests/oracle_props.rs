mod support {
    pub mod oracles;
}

use chartlab_core::downstream::cc_pca;
use chartlab_core::numkernel::{idft_subcarriers, pairwise_distances, sym_eig_desc, vectorize};
use proptest::prelude::*;
use rand::SeedableRng;
use support::oracles::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn features_ignore_per_ap_phase_and_global_gain(seed in any::<u64>()) {
        let drift = feature_invariance_trial(seed);
        prop_assert!(drift < 1e-12, "drift {drift}");
    }

    #[test]
    fn idft_scales_the_norm_by_inverse_root_w(seed in any::<u64>(), w in 1usize..40, a in 1usize..4) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let t = random_tensor(&mut rng, [a, 2, 1, w]);
        let f = idft_subcarriers(&t);
        let expect = t.frobenius_norm() / (w as f64).sqrt();
        prop_assert!((f.frobenius_norm() - expect).abs() <= 1e-12 * expect);
        let v = vectorize(&t);
        prop_assert_eq!(v.len(), t.len());
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((vn - t.frobenius_norm()).abs() <= 1e-12 * vn);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn cc_pca_matches_covariance_oracle(seed in any::<u64>()) {
        let err = pca_oracle_trial(seed, 200, 16, 2);
        prop_assert!(err < 1e-9, "max deviation {err}");
    }

    #[test]
    fn eigen_trace_and_residuals(seed in any::<u64>(), n in 1usize..24) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = random_matrix(&mut rng, n + 3, n);
        let s = x.transpose().matmul(&x).unwrap();
        let e = sym_eig_desc(&s).unwrap();
        let trace: f64 = (0..n).map(|i| s[(i, i)]).sum();
        prop_assert!((e.values.iter().sum::<f64>() - trace).abs() <= 1e-9 * trace.abs());
        for k in 0..n {
            let v = e.vectors.column(k);
            let r: f64 = s.matvec(&v).iter().zip(&v).map(|(a, b)| (a - e.values[k] * b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(r <= 1e-10 * s.frobenius_norm().max(1.0));
        }
    }

    #[test]
    fn cc_pca_distances_survive_orthogonal_maps(seed in any::<u64>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = random_matrix(&mut rng, 120, 6);
        let q = {
            let s = random_matrix(&mut rng, 6, 6);
            sym_eig_desc(&s.transpose().matmul(&s).unwrap()).unwrap().vectors
        };
        let moved = x.matmul(&q).unwrap();
        let a = pairwise_distances(&cc_pca(&x, 2).unwrap().points);
        let b = pairwise_distances(&cc_pca(&moved, 2).unwrap().points);
        let worst = a.data().iter().zip(b.data()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-9, "distance drift {worst}");
    }

    #[test]
    fn metrics_survive_isometry_and_scaling(seed in any::<u64>()) {
        let (iso, scale) = metric_invariance_trial(seed, 300);
        prop_assert!(iso < 1e-9, "isometry drift {iso}");
        prop_assert!(scale < 1e-9, "scaling drift {scale}");
    }
}

#[test]
fn identity_chart_is_perfect_at_500_points() {
    for seed in 0..3 {
        let s = identity_scores(seed, 500);
        assert!(s.iter().all(|&v| v.abs() <= 1e-12), "{s:?}");
    }
}
