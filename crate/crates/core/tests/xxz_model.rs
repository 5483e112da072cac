use ndarray::Array2;
use ptfid_core::biortho::{apply_pt, biorthogonal_eig, biorthogonal_eig_with, classify_pt, dense_ground_pair, EigOptions};
use ptfid_core::fidelity::{chi_finite_difference, chi_perturbative, Definition, PtClass};
use ptfid_core::lanczos::LanczosOptions;
use ptfid_core::linalg::dense_full_spectrum;
use ptfid_core::ssh::{band_point, SshParams};
use ptfid_core::xxz::*;
use ptfid_core::C64;
use std::f64::consts::TAU;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn sorted_re(mut v: Vec<C64>) -> Vec<f64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re));
    v.into_iter().map(|z| z.re).collect()
}

/// Independent full-space Hamiltonian built from Kronecker products of Pauli matrices.
fn full_space_hamiltonian(jz: f64, gamma: f64, l: usize) -> Array2<C64> {
    let id = Array2::<C64>::eye(2);
    let sx = ndarray::array![[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]];
    let sy = ndarray::array![[c(0., 0.), c(0., -1.)], [c(0., 1.), c(0., 0.)]];
    let sz = ndarray::array![[c(1., 0.), c(0., 0.)], [c(0., 0.), c(-1., 0.)]];
    let kron = |a: &Array2<C64>, b: &Array2<C64>| {
        let (n, m) = (a.nrows(), b.nrows());
        Array2::from_shape_fn((n * m, n * m), |(i, j)| a[[i / m, j / m]] * b[[i % m, j % m]])
    };
    let site = |op: &Array2<C64>, j: usize| (0..l).fold(Array2::<C64>::eye(1), |acc, s| kron(&acc, if s == j { op } else { &id }));
    let dim = 1 << l;
    let mut h = Array2::<C64>::zeros((dim, dim));
    for j in 0..l {
        let k = (j + 1) % l;
        h = h + site(&sx, j).dot(&site(&sx, k)) + site(&sy, j).dot(&site(&sy, k)) + site(&sz, j).dot(&site(&sz, k)).mapv(|z| z * jz);
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        h = h + site(&sz, j).mapv(|z| z * c(0.0, sign * gamma));
    }
    h
}

#[test]
fn small_chain_spectra() {
    let s = full_sector_spectrum(&XxzParams::new(0.0, 0.0, 4).unwrap()).unwrap();
    assert!(s.iter().all(|z| z.im.abs() < 1e-12));
    let re = sorted_re(s.clone());
    for (a, b) in re.iter().zip(re.iter().rev()) {
        assert!((a + b).abs() < 1e-12);
    }
    // Heisenberg ring: sector ground energy equals the full-space ground energy.
    let s = full_sector_spectrum(&XxzParams::new(1.0, 0.0, 4).unwrap()).unwrap();
    let full = dense_full_spectrum(&full_space_hamiltonian(1.0, 0.0, 4)).unwrap();
    assert!((sorted_re(s)[0] - sorted_re(full)[0]).abs() < 1e-12);
}

#[test]
fn sector_matches_full_space_with_field() {
    // The M = 0 eigenvalues form a subset of the full-space spectrum.
    let full = dense_full_spectrum(&full_space_hamiltonian(0.7, 0.3, 6)).unwrap();
    let sector = full_sector_spectrum(&XxzParams::new(0.7, 0.3, 6).unwrap()).unwrap();
    for e in sector {
        assert!(full.iter().any(|f| (f - e).norm() < 1e-9), "{e}");
    }
}

#[test]
fn spectrum_is_conjugation_closed() {
    for &(jz, g, l) in &[(1.0, 0.5, 10), (2.0, 0.5, 10), (0.3, 0.2, 8)] {
        let s = full_sector_spectrum(&XxzParams::new(jz, g, l).unwrap()).unwrap();
        let scale = s.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        classify_pt(&s, 1e-9 * scale, 1e-7 * scale).unwrap();
        for e in &s {
            assert!(s.iter().any(|f| (f - e.conj()).norm() < 1e-8 * scale));
        }
    }
}

#[test]
fn magnetization_and_symmetry() {
    for l in [4, 6, 8, 10] {
        let b = build_m0_basis(l).unwrap();
        assert_eq!(b.len(), binomial(l, l / 2));
        assert!(b.states.iter().all(|s| s.count_ones() as usize == l / 2));
        let h = build_hamiltonian(&XxzParams::new(0.4, 0.3, l).unwrap(), &b).unwrap();
        assert!(h.is_complex_symmetric());
    }
}

#[test]
fn lanczos_examples() {
    let opts = LanczosOptions::default();
    let b = build_m0_basis(12).unwrap();
    let g = ground_state(&XxzParams::new(0.5, 0.0, 12).unwrap(), &b, &opts, None).unwrap();
    assert_eq!(g.pt, PtClass::Unbroken);
    let p = XxzParams::new(0.5, 0.1, 12).unwrap();
    let g = ground_state(&p, &b, &opts, None).unwrap();
    let d = dense_ground_state(&p, &b).unwrap();
    assert!((g.energy - d.energy).norm() < 1e-10, "{} vs {}", g.energy, d.energy);
}

#[test]
fn broken_phase_at_eighteen_sites() {
    let b = build_m0_basis(18).unwrap();
    let g = ground_state(&XxzParams::new(1.0, 0.5, 18).unwrap(), &b, &LanczosOptions::default(), None).unwrap();
    assert_eq!(g.pt, PtClass::Broken);
    assert!(g.energy.im > 0.0 && g.residual < 1e-10);
}

#[test]
fn free_fermion_mapping() {
    // Jz = 0 maps to the SSH chain with v1 = w = 1, v2 = 0, u = γ on L/2 cells with
    // antiperiodic momenta (even fermion number); the Pauli normalization doubles energies.
    let (l, gamma) = (8, 0.2);
    let b = build_m0_basis(l).unwrap();
    let e0 = dense_ground_state(&XxzParams::new(0.0, gamma, l).unwrap(), &b).unwrap().energy;
    let cells = l / 2;
    let p = SshParams::new(1.0, 1.0, 0.0, gamma, cells).unwrap();
    let ff: C64 = (0..cells).map(|m| band_point(TAU * (m as f64 + 0.5) / cells as f64, &p).energies.0).sum();
    let scale = e0.re / ff.re;
    assert!((scale - 2.0).abs() < 1e-12, "scale {scale}");
    assert!((e0 - 2.0 * ff).norm() < 1e-12);
}

#[test]
fn lanczos_matches_dense_for_small_sectors() {
    let opts = LanczosOptions::default();
    let cases: &[(usize, f64, f64)] = &[
        (4, 1.0, 0.5),
        (6, -0.5, 0.35),
        (8, 0.5, 0.1),
        (8, 1.0, 0.0),
        (10, 1.0, 0.5),
        (10, -0.5, 0.35),
        (12, 0.5, 0.1),
    ];
    for &(l, jz, g) in cases {
        let b = build_m0_basis(l).unwrap();
        let pa = XxzParams::new(jz, g, l).unwrap();
        let la = ground_state(&pa, &b, &opts, None).unwrap();
        let da = dense_ground_state(&pa, &b).unwrap();
        assert!((la.energy - da.energy).norm() < 1e-10, "L={l} {pa:?}");
        // Fidelities agree to round-off; χ_fd amplifies that by 1/ε², so it is
        // compared at the coarser step.
        for eps in [1e-3, 1e-2] {
            let pb = pa.with(Direction::Gamma, g + eps);
            let lb = ground_state(&pb, &b, &opts, Some(&la.right)).unwrap();
            let db = dense_ground_state(&pb, &b).unwrap();
            let (fl, fd) = (state_fidelity(&la, &lb), pair_fidelity(&da, &db).unwrap());
            assert!((fl - fd).norm() < 1e-9, "L={l} {pa:?}: {fl} vs {fd}");
            if eps == 1e-2 {
                let (xl, xd) = (chi_finite_difference(fl, eps), chi_finite_difference(fd, eps));
                assert!((xl - xd).norm() < 1e-9, "L={l} {pa:?}: {xl} vs {xd}");
            }
        }
    }
}

#[test]
fn pt_partner_of_broken_ground_state() {
    let p = XxzParams::new(1.0, 0.5, 8).unwrap();
    let b = build_m0_basis(8).unwrap();
    let h = build_hamiltonian(&p, &b).unwrap().to_dense();
    // Translation symmetry leaves degenerate levels elsewhere in the spectrum.
    let es = biorthogonal_eig_with(&h, &EigOptions { allow_degenerate: true, ..EigOptions::default() }).unwrap();
    let g = es.ground_index();
    let cls = classify_pt(&es.eigenvalues, tol_real(&build_hamiltonian(&p, &b).unwrap()), 1e-8).unwrap();
    let partner = cls.partner(g).unwrap();
    assert!((es.eigenvalues[partner] - es.eigenvalues[g].conj()).norm() < 1e-10);
    // The PT image of the ground state is an eigenvector for the conjugate energy.
    let x = apply_pt(&translation_permutation(&b), es.right_vector(g));
    let res = h.dot(&x) - x.mapv(|z| z * es.eigenvalues[g].conj());
    assert!(res.iter().all(|z| z.norm() < 1e-10));
    // Partner susceptibility is the conjugate one.
    let v = perturbation(Direction::Gamma, &b).to_dense();
    let (chi, chi_bar) = (chi_perturbative(&es, &v, g).unwrap(), chi_perturbative(&es, &v, partner).unwrap());
    assert!((chi_bar - chi.conj()).norm() < 1e-9 * chi.norm().max(1.0));
}

#[test]
fn finite_difference_tracks_perturbation_theory_at_fourteen_sites() {
    let eps = 1e-3;
    let b = build_m0_basis(14).unwrap();
    let opts = LanczosOptions::default();
    for &g in &[0.02, 0.05, 0.1] {
        let p = XxzParams::new(0.5, g, 14).unwrap();
        let blocks = momentum_blocks(&p).unwrap();
        let (q, _) = block_ground_state(&p).unwrap();
        let es = biorthogonal_eig(&blocks[q].matrix).unwrap();
        let v = block_perturbation(Direction::Gamma, &blocks[q], 14);
        let chi = chi_perturbative(&es, &v, es.ground_index()).unwrap();
        let ga = ground_state(&p, &b, &opts, None).unwrap();
        let gb = ground_state(&p.with(Direction::Gamma, g + eps), &b, &opts, Some(&ga.right)).unwrap();
        let fd = chi_finite_difference(state_fidelity(&ga, &gb), eps);
        assert!((fd - chi).norm() < 20.0 * eps * chi.norm().max(1.0), "γ={g}: {fd} vs {chi}");
    }
}

#[test]
fn hermitian_scan_has_real_fidelity() {
    let grid: Vec<f64> = (0..5).map(|i| -0.5 + 0.25 * i as f64).collect();
    let base = XxzParams::new(0.0, 0.0, 10).unwrap();
    for pt in fidelity_scan(&base, Direction::Jz, &grid, 1e-3, Definition::Metricized, &LanczosOptions::default()).unwrap() {
        let r = pt.record.unwrap();
        assert!(r.f.im.abs() < 1e-12 && !r.straddles());
    }
}

#[test]
fn gamma_ep_bisection_brackets_a_transition() {
    let (lo, hi) = bisect_gamma_ep(1.0, 8, 0.0, 0.5, 1e-6, &LanczosOptions::default()).unwrap();
    assert!(hi - lo <= 1e-6 && lo > 0.0);
    let b = build_m0_basis(8).unwrap();
    let class = |g: f64| dense_ground_pair(&build_hamiltonian(&XxzParams::new(1.0, g, 8).unwrap(), &b).unwrap().to_dense(), &EigOptions::default())
        .map(|p| p.energy.im.abs() > 1e-9);
    assert_eq!(class(lo - 1e-4).unwrap(), false);
    assert_eq!(class(hi + 1e-4).unwrap(), true);
}

#[test]
fn momentum_blocks_reassemble_the_sector() {
    let p = XxzParams::new(1.0, 0.5, 10).unwrap();
    let mut from_blocks: Vec<C64> = Vec::new();
    for blk in momentum_blocks(&p).unwrap() {
        if blk.matrix.nrows() > 0 {
            from_blocks.extend(dense_full_spectrum(&blk.matrix).unwrap());
        }
    }
    let full = full_sector_spectrum(&p).unwrap();
    assert_eq!(from_blocks.len(), full.len());
    for e in &full {
        assert!(from_blocks.iter().any(|f| (f - e).norm() < 1e-8));
    }
}

#[test]
fn broken_ground_state_takes_the_upper_partner() {
    let p = XxzParams::new(1.0, 0.5, 10).unwrap();
    let b = build_m0_basis(10).unwrap();
    let dense = dense_ground_state(&p, &b).unwrap();
    for seed in [1u64, 2, 3, 0x5eed] {
        let g = ground_state(&p, &b, &LanczosOptions { seed, ..Default::default() }, None).unwrap();
        assert!(g.energy.im > 0.0);
        assert!((g.energy - dense.energy).norm() < 1e-9);
    }
}

#[test]
fn degenerate_ground_level_is_reported() {
    // Momenta ±q share the broken ground level here.
    let p = XxzParams::new(-1.4, 0.5, 14).unwrap();
    let b = build_m0_basis(14).unwrap();
    let err = ground_state(&p, &b, &LanczosOptions::default(), None).unwrap_err();
    assert!(matches!(err, ptfid_core::Error::DegenerateGround { .. }), "{err}");
    let p = XxzParams::new(-1.95, 0.5, 12).unwrap();
    let g = ground_state(&p, &build_m0_basis(12).unwrap(), &LanczosOptions::default(), None).unwrap();
    assert!(symmetry_residual(&build_m0_basis(12).unwrap(), &g.right) < 1e-6);
}

#[test]
fn warm_start_follows_a_level_crossing() {
    // The unbroken ground state changes momentum sector between these couplings.
    let b = build_m0_basis(12).unwrap();
    let opts = LanczosOptions::default();
    let mut seed: Option<Vec<C64>> = None;
    for jz in [-2.0, -1.95, -1.9, -1.85, -1.8] {
        let p = XxzParams::new(jz, 0.5, 12).unwrap();
        let g = ground_state(&p, &b, &opts, seed.as_deref()).unwrap();
        let d = dense_ground_state(&p, &b).unwrap();
        assert!((g.energy - d.energy).norm() < 1e-9, "Jz={jz}: {} vs {}", g.energy, d.energy);
        seed = Some(g.right);
    }
}
