use ndarray::{array, Array2};
use ptfid_core::biortho::{biorthogonal_eig, classify_pt, dense_ground_pair, EigOptions};
use ptfid_core::fidelity::{
    chi_finite_difference, chi_perturbative, chi_real_part, metricized_fidelity, one_half_ep_test, GroundPoint,
    PtClass, DEFAULT_EPSILON_SCHEDULE, DEFAULT_TOL_HALF,
};
use ptfid_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `σx + iλσz`: EP at λ = 1, `χ(λ) = −1/(4(1 − λ²)²)` on both sides.
fn toy(lambda: f64) -> Array2<C64> {
    array![[c(0., lambda), c(1., 0.)], [c(1., 0.), c(0., -lambda)]]
}

fn toy_chi(lambda: f64) -> f64 {
    -1.0 / (4.0 * (1.0 - lambda * lambda).powi(2))
}

fn toy_v() -> Array2<C64> {
    array![[c(0., 1.), c(0., 0.)], [c(0., 0.), c(0., -1.)]]
}

fn toy_point(lambda: f64) -> ptfid_core::Result<GroundPoint> {
    let p = dense_ground_pair(&toy(lambda), &EigOptions::default())?;
    Ok(GroundPoint::single(p.left, p.right, PtClass::from_energy(p.energy, 1e-10)))
}

#[test]
fn toy_perturbative_matches_closed_form() {
    for &lam in &[0.0, 0.3, 0.9, 0.999, 1.001, 1.5, 3.0] {
        let es = biorthogonal_eig(&toy(lam)).unwrap();
        let chi = chi_perturbative(&es, &toy_v(), es.ground_index()).unwrap();
        let want = toy_chi(lam);
        assert!((chi - c(want, 0.)).norm() < 1e-9 * want.abs(), "λ={lam}: {chi} vs {want}");
    }
}

#[test]
fn toy_finite_difference_converges_linearly() {
    let lam = 0.6;
    let a = dense_ground_pair(&toy(lam), &EigOptions::default()).unwrap();
    let mut errs = Vec::new();
    for &eps in &DEFAULT_EPSILON_SCHEDULE {
        let b = dense_ground_pair(&toy(lam + eps), &EigOptions::default()).unwrap();
        let f = metricized_fidelity(&a.left, &a.right, &b.left, &b.right).unwrap();
        errs.push((chi_finite_difference(f, eps) - c(toy_chi(lam), 0.)).norm());
    }
    for w in errs.windows(2) {
        let slope = (w[0] / w[1]).log10();
        assert!((slope - 1.0).abs() < 0.2, "{errs:?}");
    }
}

#[test]
fn susceptibility_is_negative_on_both_sides_of_the_ep() {
    for &lam in &[0.99, 0.999, 1.001, 1.01] {
        let es = biorthogonal_eig(&toy(lam)).unwrap();
        let chi = chi_perturbative(&es, &toy_v(), es.ground_index()).unwrap();
        assert!(chi.re < -6e2, "λ={lam}: {chi}");
    }
}

#[test]
fn one_half_across_toy_ep() {
    let r = one_half_ep_test(toy_point, 1.0 - 1e-9, 1.0 + 1e-9, &DEFAULT_EPSILON_SCHEDULE, 0.5, 0.5, DEFAULT_TOL_HALF)
        .unwrap();
    assert!(r.is_second_order, "{r:?}");
    let sym = r.trace.last().unwrap().1;
    let asym = one_half_ep_test(toy_point, 1.0 - 1e-9, 1.0 + 1e-9, &DEFAULT_EPSILON_SCHEDULE, 2.0 / 3.0, 1.0 / 3.0, DEFAULT_TOL_HALF)
        .unwrap();
    assert!((asym.trace.last().unwrap().1 - sym).abs() < 1e-3);
}

/// Random real matrices are PT symmetric under plain conjugation.
fn random_real(n: usize, seed: u64) -> Array2<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((n, n), |_| c(rng.random_range(-1.0..1.0), 0.0))
}

#[test]
fn random_pt_model_fd_and_partner_identity() {
    let n = 12;
    let h0 = random_real(n, 11);
    let v = random_real(n, 12);
    let es = biorthogonal_eig(&h0).unwrap();
    let g = es.ground_index();
    let chi = chi_perturbative(&es, &v, g).unwrap();
    let cls = classify_pt(&es.eigenvalues, 1e-10, 1e-8).unwrap();
    if let Ok(partner) = cls.partner(g) {
        let chi_bar = chi_perturbative(&es, &v, partner).unwrap();
        assert!((chi_bar - chi.conj()).norm() < 1e-9 * chi.norm().max(1.0));
        chi_real_part(chi, chi_bar, 1e-9).unwrap();
    }
    let mut errs = Vec::new();
    for &eps in &DEFAULT_EPSILON_SCHEDULE {
        let hb = &h0 + &v.mapv(|z| z * eps);
        let b = dense_ground_pair(&hb, &EigOptions::default()).unwrap();
        let f = metricized_fidelity(&es.left_vector(g), &es.right_vector(g), &b.left, &b.right).unwrap();
        errs.push((chi_finite_difference(f, eps) - chi).norm());
    }
    let slope = (errs[0] / errs[2]).log10() / 2.0;
    assert!((slope - 1.0).abs() < 0.2, "{errs:?}");
}
