//! Biorthogonal eigendecomposition, PT classification and the metric operator.
//!
//! Conventions: a right eigenvector `r` is a column with `H r = E r`; a left
//! eigenvector `l` is a row with `l H = E l`, obtained from `eig(Hᵀ)` without
//! conjugation. Overlaps `⟨L|R⟩` are the bilinear sums `Σ l_i r_i`.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{self, bilinear, eig_right, max_abs, norm2, spectrum_order, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigOptions {
    /// Raw overlap of unit left/right vectors below which the matrix counts as defective.
    pub ep_guard: f64,
    /// Pairing tolerance relative to `max(spectral radius, max|H_ij|)`.
    pub pair_rel_tol: f64,
    /// Biorthogonalize inside clusters of (numerically) degenerate eigenvalues instead
    /// of reporting `AmbiguousPairing`.
    pub allow_degenerate: bool,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self { ep_guard: 1e-12, pair_rel_tol: 1e-8, allow_degenerate: false }
    }
}

#[derive(Debug, Clone)]
pub struct BiorthogonalEigensystem {
    pub eigenvalues: Vec<C64>,
    /// Right eigenvectors as columns, unit 2-norm.
    pub right: Array2<C64>,
    /// Left covectors as rows, scaled so `left · right = I`.
    pub left: Array2<C64>,
    /// Raw `|⟨L|R⟩|` of the unit-normalized pair before rescaling.
    pub condition: Vec<f64>,
}

impl BiorthogonalEigensystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn right_vector(&self, n: usize) -> ArrayView1<'_, C64> {
        self.right.column(n)
    }

    pub fn left_vector(&self, n: usize) -> ArrayView1<'_, C64> {
        self.left.row(n)
    }

    pub fn ground_index(&self) -> usize {
        linalg::ground_index(&self.eigenvalues)
    }

    pub fn overlap_matrix(&self) -> Array2<C64> {
        self.left.dot(&self.right)
    }

    /// `max |⟨L_n|R_m⟩ − δ_nm|`.
    pub fn biorthogonality_residual(&self) -> f64 {
        let mut o = self.overlap_matrix();
        for i in 0..self.dim() {
            o[[i, i]] -= 1.0;
        }
        max_abs(&o)
    }

    /// `max |Σ_n |R_n⟩⟨L_n| − I|`.
    pub fn completeness_residual(&self) -> f64 {
        let mut p = self.right.dot(&self.left);
        for i in 0..self.dim() {
            p[[i, i]] -= 1.0;
        }
        max_abs(&p)
    }

    pub fn min_condition(&self) -> f64 {
        self.condition.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A single biorthonormal eigenpair.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub energy: C64,
    pub left: Array1<C64>,
    pub right: Array1<C64>,
    pub condition: f64,
}

fn spectral_scale(h: &Array2<C64>, vals: &Array1<C64>) -> f64 {
    let rho = vals.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let s = rho.max(max_abs(h));
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Rotate so the largest-magnitude entry of `r` is real positive; `l` absorbs the inverse phase.
fn fix_gauge(r: &mut Array1<C64>, l: &mut Array1<C64>) {
    let mut big = C64::new(0.0, 0.0);
    for z in r.iter() {
        if z.norm() > big.norm() * (1.0 + 1e-12) {
            big = *z;
        }
    }
    if big.norm() == 0.0 {
        return;
    }
    let ph = big / big.norm();
    r.mapv_inplace(|z| z * ph.conj());
    l.mapv_inplace(|z| z * ph);
}

/// Left eigen-decomposition, reusing the right one when `H = Hᵀ` exactly.
fn left_decomposition(
    h: &Array2<C64>,
    er: &Array1<C64>,
    vr: &Array2<C64>,
) -> Result<(Array1<C64>, Array2<C64>)> {
    if h == &h.t() {
        Ok((er.clone(), vr.clone()))
    } else {
        eig_right(&h.t().to_owned())
    }
}

/// Groups right indices into clusters of mutually close eigenvalues.
fn clusters(vals: &Array1<C64>, tol: f64) -> Vec<Vec<usize>> {
    let n = vals.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut c = i;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (vals[i] - vals[j]).norm() < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

fn unit_column(v: &Array2<C64>, j: usize) -> Array1<C64> {
    let c = v.column(j).to_owned();
    let n = norm2(&c);
    c / C64::new(n, 0.0)
}

/// Biorthonormalize a matched cluster: rows of the result are left covectors with
/// `L_c · R_c = I`. Returns the covectors and per-member condition numbers.
fn biorthonormalize_cluster(
    rights: &[Array1<C64>],
    lefts: &[Array1<C64>],
) -> Option<(Vec<Array1<C64>>, Vec<f64>)> {
    let s = rights.len();
    let n = rights[0].len();
    let mut m = Array2::<C64>::zeros((s, s));
    let mut lc = Array2::<C64>::zeros((s, n));
    for (a, l) in lefts.iter().enumerate() {
        lc.row_mut(a).assign(l);
        for (b, r) in rights.iter().enumerate() {
            m[[a, b]] = bilinear(l, r);
        }
    }
    let x = linalg::solve_small(&m, &lc)?;
    let mut out = Vec::with_capacity(s);
    let mut cond = Vec::with_capacity(s);
    for row in x.axis_iter(Axis(0)) {
        let row = row.to_owned();
        let nn = norm2(&row);
        if !nn.is_finite() || nn == 0.0 {
            return None;
        }
        cond.push(1.0 / nn);
        out.push(row);
    }
    Some((out, cond))
}

/// Biorthogonal eigendecomposition with default options.
pub fn biorthogonal_eig(h: &Array2<C64>) -> Result<BiorthogonalEigensystem> {
    biorthogonal_eig_with(h, &EigOptions::default())
}

pub fn biorthogonal_eig_with(h: &Array2<C64>, opts: &EigOptions) -> Result<BiorthogonalEigensystem> {
    let n = linalg::check_square(h)?;
    let (er, vr) = eig_right(h)?;
    let (el, vl) = left_decomposition(h, &er, &vr)?;
    let tol_pair = opts.pair_rel_tol * spectral_scale(h, &er);

    let mut used = vec![false; n];
    let mut rights: Vec<Option<Array1<C64>>> = vec![None; n];
    let mut lefts: Vec<Option<Array1<C64>>> = vec![None; n];
    let mut cond = vec![0.0; n];

    for cluster in clusters(&er, tol_pair) {
        let mut matched = Vec::with_capacity(cluster.len());
        for &i in &cluster {
            let best = (0..n)
                .filter(|&j| !used[j])
                .min_by(|&a, &b| (el[a] - er[i]).norm().total_cmp(&(el[b] - er[i]).norm()));
            match best {
                Some(j) if (el[j] - er[i]).norm() < tol_pair => {
                    used[j] = true;
                    matched.push(j);
                }
                _ => {
                    return Err(Error::AmbiguousPairing { re: er[i].re, im: er[i].im });
                }
            }
        }
        let rc: Vec<Array1<C64>> = cluster.iter().map(|&i| unit_column(&vr, i)).collect();
        let lc: Vec<Array1<C64>> = matched.iter().map(|&j| unit_column(&vl, j)).collect();
        let defective = || {
            let z = er[cluster[0]];
            Error::DefectiveMatrix { overlap: 0.0, re: z.re, im: z.im }
        };
        let (lnew, cnew) = if cluster.len() == 1 {
            let ov = bilinear(&lc[0], &rc[0]);
            if ov.norm() == 0.0 {
                return Err(defective());
            }
            (vec![&lc[0] / ov], vec![ov.norm()])
        } else {
            biorthonormalize_cluster(&rc, &lc).ok_or_else(defective)?
        };
        for (a, &i) in cluster.iter().enumerate() {
            if cnew[a] < opts.ep_guard {
                return Err(Error::DefectiveMatrix { overlap: cnew[a], re: er[i].re, im: er[i].im });
            }
        }
        // Defectiveness is reported first: a coalesced pair also looks like a cluster.
        if cluster.len() > 1 && !opts.allow_degenerate {
            let z = er[cluster[0]];
            return Err(Error::AmbiguousPairing { re: z.re, im: z.im });
        }
        for (a, &i) in cluster.iter().enumerate() {
            let mut r = rc[a].clone();
            let mut l = lnew[a].clone();
            fix_gauge(&mut r, &mut l);
            rights[i] = Some(r);
            lefts[i] = Some(l);
            cond[i] = cnew[a];
        }
    }

    let vals = er.to_vec();
    let order = spectrum_order(&vals);
    let mut right = Array2::<C64>::zeros((n, n));
    let mut left = Array2::<C64>::zeros((n, n));
    let mut eigenvalues = Vec::with_capacity(n);
    let mut condition = Vec::with_capacity(n);
    for (k, &i) in order.iter().enumerate() {
        right.column_mut(k).assign(rights[i].as_ref().expect("every index assigned"));
        left.row_mut(k).assign(lefts[i].as_ref().expect("every index assigned"));
        eigenvalues.push(vals[i]);
        condition.push(cond[i]);
    }
    Ok(BiorthogonalEigensystem { eigenvalues, right, left, condition })
}

/// Dense biorthonormal pair for one eigenvalue, chosen by `select` from the full
/// spectrum of `H`. Only the selected eigenvalue needs to be isolated.
pub fn dense_eigenpair_by<F>(h: &Array2<C64>, opts: &EigOptions, select: F) -> Result<Eigenpair>
where
    F: FnOnce(&[C64]) -> usize,
{
    linalg::check_square(h)?;
    let (er, vr) = eig_right(h)?;
    let vals = er.to_vec();
    let i = select(&vals);
    let tol_pair = opts.pair_rel_tol * spectral_scale(h, &er);
    let e = er[i];
    let r = unit_column(&vr, i);
    if let Some(j) = (0..vals.len()).find(|&j| j != i && (vals[j] - e).norm() < tol_pair) {
        // Coalesced eigenvectors mark an exceptional point rather than a plain degeneracy.
        let other = unit_column(&vr, j);
        let cos = r.iter().zip(&other).map(|(a, b)| a.conj() * b).sum::<C64>().norm().min(1.0);
        let sin = (1.0 - cos * cos).sqrt();
        if sin < opts.ep_guard.sqrt() {
            return Err(Error::DefectiveMatrix { overlap: sin, re: e.re, im: e.im });
        }
        return Err(Error::AmbiguousPairing { re: e.re, im: e.im });
    }
    let l = if h == &h.t() {
        r.clone()
    } else {
        let (el, vl) = eig_right(&h.t().to_owned())?;
        let j = (0..el.len())
            .min_by(|&a, &b| (el[a] - e).norm().total_cmp(&(el[b] - e).norm()))
            .expect("non-empty");
        if (el[j] - e).norm() >= tol_pair {
            return Err(Error::AmbiguousPairing { re: e.re, im: e.im });
        }
        unit_column(&vl, j)
    };
    let ov = bilinear(&l, &r);
    let condition = ov.norm();
    if condition < opts.ep_guard {
        return Err(Error::DefectiveMatrix { overlap: condition, re: e.re, im: e.im });
    }
    let mut r = r;
    let mut l = l / ov;
    fix_gauge(&mut r, &mut l);
    Ok(Eigenpair { energy: e, left: l, right: r, condition })
}

/// Dense ground pair (smallest Re, ties to larger Im).
pub fn dense_ground_pair(h: &Array2<C64>, opts: &EigOptions) -> Result<Eigenpair> {
    dense_eigenpair_by(h, opts, linalg::ground_index)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PtClassification {
    pub real_indices: Vec<usize>,
    /// `pair_map[n] = Some(n̄)` for complex eigenvalues, `None` for real ones.
    pub pair_map: Vec<Option<usize>>,
    pub tol_real: f64,
    pub tol_pair: f64,
}

impl PtClassification {
    pub fn is_real(&self, n: usize) -> bool {
        self.pair_map[n].is_none()
    }

    pub fn partner(&self, n: usize) -> Result<usize> {
        self.pair_map[n].ok_or(Error::NotBroken(n))
    }

    pub fn complex_count(&self) -> usize {
        self.pair_map.iter().filter(|p| p.is_some()).count()
    }
}

/// Split a spectrum into real eigenvalues and conjugate pairs (greedy nearest match).
pub fn classify_pt(eigenvalues: &[C64], tol_real: f64, tol_pair: f64) -> Result<PtClassification> {
    let n = eigenvalues.len();
    let mut pair_map = vec![None; n];
    let real_indices: Vec<usize> = (0..n).filter(|&i| eigenvalues[i].im.abs() < tol_real).collect();
    let mut is_real = vec![false; n];
    for &i in &real_indices {
        is_real[i] = true;
    }
    for i in 0..n {
        if is_real[i] || pair_map[i].is_some() {
            continue;
        }
        let target = eigenvalues[i].conj();
        let best = (0..n)
            .filter(|&j| j != i && !is_real[j] && pair_map[j].is_none())
            .min_by(|&a, &b| {
                (eigenvalues[a] - target).norm().total_cmp(&(eigenvalues[b] - target).norm())
            });
        match best {
            Some(j) if (eigenvalues[j] - target).norm() < tol_pair => {
                pair_map[i] = Some(j);
                pair_map[j] = Some(i);
            }
            _ => {
                return Err(Error::UnpairableSpectrum { re: eigenvalues[i].re, im: eigenvalues[i].im });
            }
        }
    }
    Ok(PtClassification { real_indices, pair_map, tol_real, tol_pair })
}

pub fn pt_partner_state(classification: &PtClassification, n: usize) -> Result<usize> {
    classification.partner(n)
}

/// Metric operator `G = Σ_n |L_n⟩⟨L_n|`, i.e. `G_ij = Σ_n conj(l_n,i) l_n,j`.
pub fn metric_operator(es: &BiorthogonalEigensystem) -> Array2<C64> {
    es.left.t().mapv(|z| z.conj()).dot(&es.left)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(g: &Array2<C64>) -> Result<Vec<f64>> {
    use ndarray_linalg::{EigValsh, UPLO};
    let mut v = g.eigvalsh(UPLO::Upper)?.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `(PT)` action `x ↦ P conj(x)` with `P` a permutation (`perm[i]` is the image of `i`).
pub fn apply_pt(perm: &[usize], x: ArrayView1<'_, C64>) -> Array1<C64> {
    let mut y = Array1::<C64>::zeros(x.len());
    for (i, &p) in perm.iter().enumerate() {
        y[p] = x[i].conj();
    }
    y
}
