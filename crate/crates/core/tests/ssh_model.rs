use ndarray::array;
use ptfid_core::biortho::{biorthogonal_eig, classify_pt, hermitian_eigenvalues, metric_operator};
use ptfid_core::fidelity::{
    chi_perturbative, chi_rr_perturbative, fidelity_variant, one_half_ep_test, Definition, GroundPoint,
};
use ptfid_core::ssh::*;
use ptfid_core::{Error, C64};
use std::f64::consts::PI;

fn params(v1: f64, v2: f64, u: f64, l: usize) -> SshParams {
    SshParams::new(1.0, v1, v2, u, l).unwrap()
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn bloch_matrix_examples() {
    let h = bloch_matrix(0.7, &params(0.0, 0.0, 0.0, 10));
    assert_eq!(h, array![[c(0., 0.), c(-1., 0.)], [c(-1., 0.), c(0., 0.)]]);
    let h = bloch_matrix(PI, &params(1.0, 0.0, 0.09, 10));
    assert!((h[[0, 1]]).norm() < 1e-15 && (h[[0, 0]] - c(0., 0.09)).norm() < 1e-15);
}

#[test]
fn band_points() {
    assert!(delta(PI, &params(1.0, 0.0, 0.0, 10)).abs() < 1e-15);
    let p = params(0.85, 0.0, 0.09, 101);
    assert!(p.momenta().iter().all(|&k| band_point(k, &p).branch == Branch::Real));
    let p = params(1.0, 0.0, 0.2, 101);
    assert!(delta((-0.98f64).acos(), &p).abs() < 1e-14);
}

#[test]
fn states_are_biorthonormal() {
    let check = |k: f64, p: &SshParams| {
        let s = single_particle_states(k, p).unwrap();
        let dot = |a: &ndarray::Array1<C64>, b: &ndarray::Array1<C64>| a.iter().zip(b).map(|(x, y)| x * y).sum::<C64>();
        let norm = |a: &ndarray::Array1<C64>| a.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let r = [
            (dot(&s.left_minus, &s.right_minus) - 1.0).norm(),
            (dot(&s.left_plus, &s.right_plus) - 1.0).norm(),
            dot(&s.left_minus, &s.right_plus).norm(),
            dot(&s.left_plus, &s.right_minus).norm(),
            (norm(&s.right_minus) - 1.0).abs(),
            (norm(&s.right_plus) - 1.0).abs(),
        ];
        r.into_iter().fold(0.0, f64::max)
    };
    assert!(check(3.0, &params(0.85, 0.0, 0.09, 101)) < 1e-12);
    let p = params(0.92, 0.0, 0.09, 101);
    assert!(delta(PI, &p) < 0.0);
    assert!(check(PI, &p) < 1e-12);
    // Broken momentum where the off-diagonal coupling vanishes, and just beside it.
    assert!(check(PI, &params(1.0, 0.0, 0.2, 20)) < 1e-12);
    assert!(check(PI, &params(1.0 + 1e-7, 0.0, 0.2, 20)) < 1e-12);
    let (f, _) = many_body_fidelity(&params(1.0, 0.0, 0.2, 20), 1.0, 1.001).unwrap();
    assert!(f.re.is_finite() && (f.re - 1.0).abs() < 1e-4);
    // Hermitian limit: left covectors are the conjugated right vectors.
    let s = single_particle_states(1.1, &params(0.6, 0.3, 0.0, 10)).unwrap();
    assert!((&s.left_minus - &s.right_minus.mapv(|z| z.conj())).iter().all(|z| z.norm() < 1e-12));
    assert!(matches!(
        single_particle_states((-0.98f64).acos(), &params(1.0, 0.0, 0.2, 10)),
        Err(Error::AtExceptionalMomentum { .. })
    ));
}

#[test]
fn closed_form_chi_examples() {
    let v = chi_k_metricized(PI / 2.0, &params(1.0, 0.0, 0.0, 10)).unwrap();
    assert!((v - 1.0 / 16.0).abs() < 1e-15);
    let p = params(0.92, 0.0, 0.09, 101);
    assert!(chi_k_metricized(PI, &p).unwrap() < 0.0);
    // On u = √(1 − v1²) the numerator and Δ vanish at the same momentum.
    let v1: f64 = 0.6;
    let p = params(v1, 0.0, (1.0 - v1 * v1).sqrt(), 10);
    let k = (-v1).acos();
    assert!(delta(k, &p).abs() < 1e-14);
    assert!((k.sin().powi(2) - p.u * p.u).abs() < 1e-14);
}

#[test]
fn closed_forms_match_generic_two_band_sums() {
    let golden = 0.5 * (1.0 + 5f64.sqrt());
    for &v2 in &[0.0, 0.3, golden] {
        for i in 0..16 {
            for j in 0..9 {
                for m in 1..7 {
                    let k = 0.05 + 2.0 * PI * i as f64 / 16.0;
                    let p = params(0.2 + 0.2 * j as f64, v2, 0.08 * m as f64, 10);
                    if delta(k, &p).abs() < 1e-2 {
                        continue;
                    }
                    let es = biorthogonal_eig(&bloch_matrix(k, &p)).unwrap();
                    let st = single_particle_states(k, &p).unwrap();
                    let g = (0..2).min_by(|&a, &b| {
                        (es.eigenvalues[a] - st.energies.0).norm().total_cmp(&(es.eigenvalues[b] - st.energies.0).norm())
                    });
                    let g = g.unwrap();
                    let v = bloch_derivative_v1(k);
                    let chi = chi_k_metricized(k, &p).unwrap();
                    let oracle = chi_perturbative(&es, &v, g).unwrap();
                    assert!((oracle - chi).norm() < 1e-10 * chi.abs().max(1.0), "{p:?} k={k}: {chi} vs {oracle}");
                    let rr = chi_k_rr(k, &p).unwrap();
                    let oracle = chi_rr_perturbative(&es, &v, g).unwrap();
                    assert!((oracle - rr).norm() < 1e-10 * rr.abs().max(1.0), "RR {p:?} k={k}: {rr} vs {oracle}");
                }
            }
        }
    }
}

#[test]
fn rr_reduces_to_metricized_when_hermitian() {
    for &(v1, v2) in &[(0.4, 0.0), (1.3, 0.2), (0.7, 1.1)] {
        let p = params(v1, v2, 0.0, 10);
        for i in 0..12 {
            let k = 0.1 + 0.5 * i as f64;
            let (a, b) = (chi_k_rr(k, &p).unwrap(), chi_k_metricized(k, &p).unwrap());
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
        }
    }
    assert!(matches!(chi_k_rr(PI, &params(1.5, 0.0, 0.0, 10)).map(|_| ()), Ok(())));
}

#[test]
fn many_body_products() {
    let p = params(1.08, 0.0, 0.2, 101);
    let (f, _) = many_body_fidelity(&p, 1.08, 1.08).unwrap();
    assert!((f - 1.0).norm() < 1e-12);
    let (f, per_k) = many_body_fidelity(&p, 1.08, 1.13).unwrap();
    let complex: Vec<_> = per_k.iter().filter(|z| z.im.abs() > 1e-8).collect();
    assert_eq!(complex.len(), 2);
    for z in complex {
        assert!((z.re - 0.5).abs() < 1e-6, "{z}");
    }
    assert!(f.re > 0.0);
    let p = params(0.85, 0.0, 0.09, 101);
    let (x, _) = chi_total(&p).unwrap();
    assert!(x / 101.0 > 0.0 && x / 101.0 < 1.0);
}

#[test]
fn rr_fidelity_stays_in_unit_interval_across_ep() {
    let a = params(1.08, 0.0, 0.2, 101);
    let b = params(1.13, 0.0, 0.2, 101);
    for k in a.momenta() {
        let (sa, sb) = (single_particle_states(k, &a).unwrap(), single_particle_states(k, &b).unwrap());
        let f = fidelity_variant(Definition::RightRight, &sa.left_minus, &sa.right_minus, &sb.left_minus, &sb.right_minus)
            .unwrap();
        assert!(f.im == 0.0 && (0.0..=1.0 + 1e-12).contains(&f.re));
    }
}

#[test]
fn ep_geometry() {
    let g = ep_momenta(&params(1.0, 0.0, 0.2, 101));
    assert_eq!(g.k_ep.len(), 2);
    assert!((g.k_ep[0].cos() + 0.98).abs() < 1e-14);
    assert!((g.k_ep[0] + g.k_ep[1] - 2.0 * PI).abs() < 1e-12);
    let g = ep_momenta(&params(0.7, 0.3, 0.0, 10));
    assert!(g.k_ep.iter().any(|k| (k.cos() + 1.0).abs() < 1e-12));
    let p = params(0.5, 0.0, 0.2, 101);
    let v = bisect_pt_boundary_v1(&p, 0.5, 0.9, 1e-9).unwrap();
    assert!((v - 0.8).abs() < 1e-6);
}

#[test]
fn positive_divergence_curves() {
    assert!((positive_divergence_u_v2_zero(1.0, 0.6).unwrap() - 0.8).abs() < 1e-15);
    assert_eq!(positive_divergence_u_v2_zero(1.0, 1.0), Some(0.0));
    let golden = 0.5 * (1.0 + 5f64.sqrt());
    let ks: Vec<f64> = (1..40).map(|i| 0.15 * i as f64).collect();
    for (k, v1, u) in positive_divergence_curve(1.0, golden, &ks) {
        let (v1e, ue) = golden_curve_expanded(k);
        assert!((v1 - v1e).abs() < 1e-12 && (u - ue).abs() < 1e-10, "k={k}");
    }
}

#[test]
fn metric_of_unbroken_block_is_positive() {
    let p = params(0.85, 0.0, 0.09, 10);
    let es = biorthogonal_eig(&bloch_matrix(3.0, &p)).unwrap();
    let g = hermitian_eigenvalues(&metric_operator(&es)).unwrap();
    assert!(g.iter().all(|&x| x > 0.0));
    // Close to an EP the metric becomes ill conditioned but stays positive.
    let k = ep_momenta(&params(1.0, 0.0, 0.2, 10)).k_ep[0];
    let p = params(1.0, 0.0, 0.2, 10);
    let es = biorthogonal_eig(&bloch_matrix(k - 1e-6, &p)).unwrap();
    let g = hermitian_eigenvalues(&metric_operator(&es)).unwrap();
    assert!(g[0] > 0.0 && g[1] / g[0] > 1e3, "{g:?}");
}

#[test]
fn broken_block_pairs() {
    let p = params(0.92, 0.0, 0.09, 10);
    let h = bloch_matrix(PI, &p);
    let es = biorthogonal_eig(&h).unwrap();
    let cls = classify_pt(&es.eigenvalues, 1e-12, 1e-8).unwrap();
    assert_eq!(cls.complex_count(), 2);
    let d = delta(PI, &p);
    assert!(es.eigenvalues.iter().all(|e| (e.im.abs() - (-d).sqrt()).abs() < 1e-12));
}

#[test]
fn one_half_per_momentum() {
    let p = params(1.08, 0.0, 0.2, 101);
    let k = ep_momenta(&params(1.1, 0.0, 0.2, 101)).k_ep[0];
    let v_ep = ep_v1_at_momentum(k, &p).into_iter().find(|v| (v - 1.1).abs() < 1e-6).unwrap();
    let model = |v1: f64| -> ptfid_core::Result<GroundPoint> { k_ground_point(k, &p.with_v1(v1)) };
    let r = one_half_ep_test(model, v_ep - 1e-8, v_ep + 1e-8, &[1e-2, 1e-3, 1e-4], 0.5, 0.5, 5e-3).unwrap();
    assert!(r.is_second_order, "{r:?}");
    assert_ne!(model(v_ep - 1e-3).unwrap().pt, model(v_ep + 1e-3).unwrap().pt);
}

#[test]
fn open_chain_boundary_modes() {
    let trivial = open_boundary_spectrum(&params(0.5, 0.0, 0.1, 40)).unwrap();
    assert!(trivial.modes.is_empty());
    let topo = open_boundary_spectrum(&params(1.5, 0.0, 0.1, 40)).unwrap();
    assert_eq!(topo.modes.len(), 2);
    let small = open_boundary_spectrum(&params(1.5, 0.0, 0.1, 20)).unwrap();
    assert_eq!(small.modes.len(), 2);
    assert!(small.modes.iter().all(|m| m.energy.re.abs() < 1e-3));
}

#[test]
fn berry_phase_hermitian_limit() {
    for &(v1, re) in &[(0.5, 0.0), (1.5, PI)] {
        let p = params(v1, 0.0, 0.0, 10);
        let a = complex_berry_phase_analytic(&p, Band::Minus).unwrap();
        let n = complex_berry_phase_numeric(&p, Band::Minus, 512).unwrap();
        assert!((a - c(re, 0.0)).norm() < 1e-12);
        assert!((n.value - a).norm() < 1e-8, "{}", n.value);
    }
}
