use dyntopic_core::linalg::{svd::jacobi_svd, truncated_svd, CsrMatrix, DenseMatrix};
use dyntopic_core::nmf::{factorize, nndsvd_init, reconstruction_error, Init, NmfConfig, UpdateRule};
use dyntopic_core::synth::planted_factors;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sparse(n: usize, m: usize, density: f64, seed: u64) -> CsrMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Vec::new();
    for r in 0..n {
        for c in 0..m {
            if rng.random::<f64>() < density {
                t.push((r, c, rng.random::<f64>()));
            }
        }
    }
    CsrMatrix::from_triplets(n, m, &t).unwrap()
}

fn oracle_singular_values(a: &CsrMatrix) -> Vec<f64> {
    let d = a.to_dense();
    let m = DMatrix::from_row_slice(d.rows(), d.cols(), d.as_slice());
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

#[test]
fn truncated_svd_matches_nalgebra() {
    for (i, &(n, m, k)) in [(30, 20, 5), (120, 90, 8), (90, 150, 10), (200, 60, 4)].iter().enumerate() {
        let a = random_sparse(n, m, 0.1, i as u64);
        let svd = truncated_svd(&a, k).unwrap();
        let expected = oracle_singular_values(&a);
        for j in 0..k {
            let rel = (svd.s[j] - expected[j]).abs() / expected[0];
            assert!(rel < 1e-9, "{n}x{m} sigma_{j}: {} vs {}", svd.s[j], expected[j]);
        }
        // A v = sigma u for every returned triplet
        for j in 0..k {
            let v: Vec<f64> = (0..m).map(|c| svd.v.get(c, j)).collect();
            let av = a.matvec(&v);
            let resid: f64 = (0..n).map(|r| (av[r] - svd.s[j] * svd.u.get(r, j)).powi(2)).sum::<f64>().sqrt();
            assert!(resid < 1e-8 * svd.s[0], "{n}x{m} triplet {j} residual {resid}");
        }
    }
}

#[test]
fn jacobi_matches_nalgebra_on_dense() {
    let a = random_sparse(12, 9, 1.0, 7);
    let svd = jacobi_svd(&a.to_dense());
    let expected = oracle_singular_values(&a);
    for j in 0..9 {
        assert!((svd.s[j] - expected[j]).abs() < 1e-12 * expected[0]);
    }
}

#[test]
fn nndsvd_is_deterministic() {
    let a = random_sparse(150, 110, 0.08, 3);
    let (w1, h1) = nndsvd_init(&a, 7).unwrap();
    let (w2, h2) = nndsvd_init(&a, 7).unwrap();
    assert_eq!(w1, w2);
    assert_eq!(h1, h2);
    let f1 = factorize(&a, 7, &NmfConfig::default()).unwrap();
    let f2 = factorize(&a, 7, &NmfConfig::default()).unwrap();
    assert_eq!(f1, f2);
}

#[test]
fn planted_factors_are_recovered() {
    for seed in 0..4u64 {
        let (a, w, h) = planted_factors(60 + 20 * seed as usize, 80, 3 + seed as usize, 0.5, seed).unwrap();
        let f = factorize(&a, w.cols(), &NmfConfig::default()).unwrap();
        let rel = f.final_error / a.frobenius_norm_sq().sqrt();
        assert!(rel < 1e-4, "seed {seed}: relative error {rel}");
        assert_eq!(f.w.rows(), w.rows());
        assert_eq!(f.h.cols(), h.cols());
    }
}

fn matrix_strategy() -> impl Strategy<Value = (CsrMatrix, usize)> {
    (2usize..25, 2usize..25, 0.1f64..1.0, any::<u64>()).prop_flat_map(|(n, m, d, seed)| {
        let a = random_sparse(n, m, d, seed);
        let limit = n.min(m);
        (Just(a), 1..=limit)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_is_monotone_and_factors_non_negative(
        (a, k) in matrix_strategy(),
        multiplicative in any::<bool>(),
        seed in 0u64..4,
    ) {
        prop_assume!(a.nnz() > 0);
        let config = NmfConfig {
            init: if seed == 0 { Init::Nndsvd } else { Init::Random { seed } },
            rule: if multiplicative { UpdateRule::Multiplicative } else { UpdateRule::Hals },
            max_iter: 60,
            tol: 1e-12,
        };
        let f = factorize(&a, k, &config).unwrap();
        for pair in f.objective_trace.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-9, "trace rose: {} -> {}", pair[0], pair[1]);
        }
        prop_assert!(f.w.min_value() >= 0.0 && f.h.min_value() >= 0.0);
        let exact = reconstruction_error(&a, &f.w, &f.h).unwrap();
        prop_assert!((exact - f.final_error).abs() <= 1e-12 * (1.0 + exact));
        prop_assert_eq!(f.objective_trace.len(), f.iterations_run + 1);
    }

    #[test]
    fn reconstruction_error_matches_dense_definition(
        (a, k) in matrix_strategy(),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = DenseMatrix::zeros(a.rows(), k);
        let mut h = DenseMatrix::zeros(k, a.cols());
        w.as_mut_slice().iter_mut().for_each(|x| *x = rng.random());
        h.as_mut_slice().iter_mut().for_each(|x| *x = rng.random());
        let wh = w.matmul(&h).unwrap();
        let ad = a.to_dense();
        let brute: f64 = ad.as_slice().iter().zip(wh.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let got = reconstruction_error(&a, &w, &h).unwrap();
        prop_assert!((got - brute).abs() <= 1e-10 * (1.0 + brute));
    }
}
