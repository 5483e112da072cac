use ndarray::Array2;
use proptest::prelude::*;
use ptfid_core::biortho::{biorthogonal_eig, classify_pt, metric_operator, EigOptions};
use ptfid_core::fidelity::{fidelity_variant, metricized_fidelity, Definition};
use ptfid_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(n: usize, seed: u64) -> Array2<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, n), |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Real matrices are PT symmetric with PT = complex conjugation.
fn random_real(n: usize, seed: u64) -> Array2<C64> {
    random_matrix(n, seed).mapv(|z| C64::new(z.re, 0.0))
}

/// Real-spectrum non-Hermitian matrix `S D S⁻¹` with real diagonal `D`.
fn random_real_spectrum(n: usize, seed: u64) -> Array2<C64> {
    let s = random_matrix(n, seed) + Array2::<C64>::eye(n).mapv(|z| z * 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let d = Array2::from_diag(&ndarray::Array1::from_shape_fn(n, |i| C64::new(i as f64 + rng.random_range(0.0..0.5), 0.0)));
    use ndarray_linalg::Inverse;
    s.dot(&d).dot(&s.inv().unwrap())
}

fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_matrices_are_biorthonormal(n in 2usize..=64, seed in any::<u64>()) {
        let es = biorthogonal_eig(&random_matrix(n, seed)).unwrap();
        prop_assert!(es.biorthogonality_residual() < 1e-9, "biorthogonality {}", es.biorthogonality_residual());
        prop_assert!(es.completeness_residual() < 1e-8, "completeness {}", es.completeness_residual());
    }

    #[test]
    fn real_matrices_have_conjugate_closed_spectra(n in 2usize..=40, seed in any::<u64>()) {
        let h = random_real(n, seed);
        let es = biorthogonal_eig(&h).unwrap();
        let scale = max_abs(&h).max(1.0);
        let c = classify_pt(&es.eigenvalues, 1e-9 * scale, 1e-7 * scale).unwrap();
        for i in 0..n {
            if let Some(j) = c.pair_map[i] {
                prop_assert!((es.eigenvalues[i] - es.eigenvalues[j].conj()).norm() < 1e-7 * scale);
            }
        }
    }

    #[test]
    fn metric_is_stationary_only_for_real_spectra(n in 2usize..=24, seed in any::<u64>()) {
        // H†G = GH holds exactly when every eigenvalue is real.
        let check = |h: &Array2<C64>| {
            let es = biorthogonal_eig(h).unwrap();
            let g = metric_operator(&es);
            let hd = h.t().mapv(|z| z.conj());
            (max_abs(&(hd.dot(&g) - g.dot(h))) / max_abs(&g), es.eigenvalues.iter().all(|e| e.im.abs() < 1e-9))
        };
        let (dev, real) = check(&random_real_spectrum(n, seed));
        prop_assert!(real);
        prop_assert!(dev < 1e-8, "real-spectrum deviation {dev}");
        let (dev, real) = check(&random_matrix(n, seed));
        prop_assert!(!real);
        prop_assert!(dev > 1e-6, "complex-spectrum deviation {dev}");
    }

    #[test]
    fn fidelities_are_gauge_invariant(n in 2usize..=16, seed in any::<u64>(), re in 0.1f64..10.0, ph in 0.0f64..6.28) {
        let a = biorthogonal_eig(&random_matrix(n, seed)).unwrap();
        let b = biorthogonal_eig(&(random_matrix(n, seed) + random_matrix(n, seed ^ 1).mapv(|z| z * 1e-2))).unwrap();
        let (ga, gb) = (a.ground_index(), b.ground_index());
        let c = C64::from_polar(re, ph);
        let ra2 = a.right_vector(ga).mapv(|z| z * c);
        let la2 = a.left_vector(ga).mapv(|z| z / c);
        for def in [Definition::Metricized, Definition::RightRight, Definition::LrSqrtAbs] {
            let f0 = fidelity_variant(def, &a.left_vector(ga), &a.right_vector(ga), &b.left_vector(gb), &b.right_vector(gb)).unwrap();
            let f1 = fidelity_variant(def, &la2, &ra2, &b.left_vector(gb), &b.right_vector(gb)).unwrap();
            prop_assert!((f0 - f1).norm() < 1e-10 * f0.norm().max(1.0), "{def}: {f0} vs {f1}");
        }
        let f = metricized_fidelity(&a.left_vector(ga), &a.right_vector(ga), &a.left_vector(ga), &a.right_vector(ga)).unwrap();
        prop_assert!((f - 1.0).norm() < 1e-9);
    }
}

#[test]
fn exceptional_point_is_rejected() {
    let h = ndarray::array![[C64::new(0.0, 1.0), C64::new(1.0, 0.0)], [C64::new(1.0, 0.0), C64::new(0.0, -1.0)]];
    assert!(matches!(biorthogonal_eig(&h), Err(ptfid_core::Error::DefectiveMatrix { .. })));
}

#[test]
fn degenerate_clusters_need_opt_in() {
    let h = Array2::<C64>::eye(3);
    assert!(biorthogonal_eig(&h).is_err());
    let opts = EigOptions { allow_degenerate: true, ..EigOptions::default() };
    let es = ptfid_core::biortho::biorthogonal_eig_with(&h, &opts).unwrap();
    assert!(es.biorthogonality_residual() < 1e-12);
}
