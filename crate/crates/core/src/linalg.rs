//! Small vector helpers and thin wrappers over the LAPACK eigensolvers.

use ndarray::{Array1, Array2, ArrayBase, Data, Ix1};
use ndarray_linalg::{Eig, EigVals};
use num_complex::Complex64;
use std::cmp::Ordering;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest dimension accepted by any dense eigensolve.
pub const DENSE_CAP: usize = 20_000;

/// Unconjugated bilinear product `Σ a_i b_i`.
pub fn bilinear<S1, S2>(a: &ArrayBase<S1, Ix1>, b: &ArrayBase<S2, Ix1>) -> C64
where
    S1: Data<Elem = C64>,
    S2: Data<Elem = C64>,
{
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Conjugating inner product `Σ conj(a_i) b_i`.
pub fn inner<S1, S2>(a: &ArrayBase<S1, Ix1>, b: &ArrayBase<S2, Ix1>) -> C64
where
    S1: Data<Elem = C64>,
    S2: Data<Elem = C64>,
{
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2<S: Data<Elem = C64>>(a: &ArrayBase<S, Ix1>) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn slice_bilinear(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn slice_norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub(crate) fn check_square(h: &Array2<C64>) -> Result<usize> {
    let (r, c) = h.dim();
    if r != c {
        return Err(Error::NotSquare { rows: r, cols: c });
    }
    if r == 0 {
        return Err(Error::Empty);
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(r)
}

/// Relative tolerance under which two real parts count as tied.
const TIE_REL: f64 = 1e-9;

fn tie_scale(vals: &[C64]) -> f64 {
    vals.iter().fold(1.0f64, |m, z| m.max(z.norm())) * TIE_REL
}

/// Permutation sorting by ascending Re, then ascending Im; real parts within a
/// relative 1e-9 of each other are treated as tied so conjugate pairs stay adjacent
/// in (−Im, +Im) order.
pub fn spectrum_order(vals: &[C64]) -> Vec<usize> {
    let tol = tie_scale(vals);
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].re.partial_cmp(&vals[b].re).unwrap_or(Ordering::Equal));
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && vals[idx[end]].re - vals[idx[end - 1]].re <= tol {
            end += 1;
        }
        idx[start..end].sort_by(|&a, &b| {
            vals[a].im.partial_cmp(&vals[b].im).unwrap_or(Ordering::Equal)
        });
        start = end;
    }
    idx
}

/// Index of the ground state: smallest Re E, ties resolved toward larger Im E.
pub fn ground_index(vals: &[C64]) -> usize {
    let tol = tie_scale(vals);
    let min_re = vals.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let mut best = None::<usize>;
    for (i, z) in vals.iter().enumerate() {
        if z.re - min_re <= tol && best.is_none_or(|b| z.im > vals[b].im) {
            best = Some(i);
        }
    }
    best.unwrap_or(0)
}

/// Right eigenpairs of `h`; eigenvectors are the columns of the returned matrix.
pub fn eig_right(h: &Array2<C64>) -> Result<(Array1<C64>, Array2<C64>)> {
    let n = check_square(h)?;
    if n > DENSE_CAP {
        return Err(Error::DimTooLarge { dim: n, cap: DENSE_CAP });
    }
    Ok(h.eig()?)
}

/// All eigenvalues sorted by [`spectrum_order`].
pub fn dense_full_spectrum(h: &Array2<C64>) -> Result<Vec<C64>> {
    let n = check_square(h)?;
    if n > DENSE_CAP {
        return Err(Error::DimTooLarge { dim: n, cap: DENSE_CAP });
    }
    let vals = h.eigvals()?.to_vec();
    Ok(spectrum_order(&vals).into_iter().map(|i| vals[i]).collect())
}

/// Solve a small dense complex system by Gaussian elimination with partial pivoting.
pub(crate) fn solve_small(a: &Array2<C64>, b: &Array2<C64>) -> Option<Array2<C64>> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[[i, col]].norm().total_cmp(&m[[j, col]].norm()))?;
        if m[[piv, col]].norm() == 0.0 {
            return None;
        }
        if piv != col {
            for j in 0..n {
                m.swap([piv, j], [col, j]);
            }
            for j in 0..x.ncols() {
                x.swap([piv, j], [col, j]);
            }
        }
        let p = m[[col, col]];
        for i in col + 1..n {
            let f = m[[i, col]] / p;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in col..n {
                let t = m[[col, j]];
                m[[i, j]] -= f * t;
            }
            for j in 0..x.ncols() {
                let t = x[[col, j]];
                x[[i, j]] -= f * t;
            }
        }
    }
    for col in (0..n).rev() {
        let p = m[[col, col]];
        for j in 0..x.ncols() {
            let mut s = x[[col, j]];
            for k in col + 1..n {
                s -= m[[col, k]] * x[[k, j]];
            }
            x[[col, j]] = s / p;
        }
    }
    Some(x)
}
