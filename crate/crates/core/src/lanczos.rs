//! Lanczos iteration for complex-symmetric operators (`A = Aᵀ`, not Hermitian).
//!
//! The Krylov basis is orthonormal in the bilinear form `⟨u, v⟩ = Σ u_i v_i`, which
//! turns the projection into a complex-symmetric tridiagonal matrix. Explicit restarts
//! from the current target Ritz vector keep the stored basis bounded.

use ndarray::Array2;
use num_complex::ComplexFloat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{eig_right, ground_index, slice_bilinear, slice_norm, C64};
use crate::sparse::LinearOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Total matrix-vector products allowed.
    pub max_iter: usize,
    /// Krylov basis size per restart cycle.
    pub max_krylov: usize,
    /// Required `‖Ax − θx‖₂` for unit `x`.
    pub tol_resid: f64,
    /// `|⟨w,w⟩| / ‖w‖²` below this is a quasi-null breakdown.
    pub breakdown_guard: f64,
    /// Fresh random restarts allowed after breakdowns.
    pub restart_max: usize,
    /// Seed for random start and restart vectors.
    pub seed: u64,
    /// Relative weight of a seeded random admixture added to a supplied start vector.
    /// Lanczos cannot leave the symmetry sectors present in its start vector, so a pure
    /// warm start would keep following a state across a ground-state level crossing.
    pub start_mix: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            max_krylov: 120,
            tol_resid: 1e-10,
            breakdown_guard: 1e-14,
            restart_max: 5,
            seed: 0x5eed,
            start_mix: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LanczosResult {
    pub eigenvalue: C64,
    /// Unit 2-norm right eigenvector.
    pub right: Vec<C64>,
    /// Left covector `x / (x·x)`, so that `left · right = 1`.
    pub left: Vec<C64>,
    pub residual: f64,
    pub matvecs: usize,
    pub cycles: usize,
    pub breakdowns: usize,
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), 0.0)).collect()
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

struct Ritz {
    values: Vec<C64>,
    vectors: Array2<C64>,
    target: usize,
}

fn ritz(alpha: &[C64], beta: &[C64]) -> Result<Ritz> {
    let m = alpha.len();
    let mut t = Array2::<C64>::zeros((m, m));
    for i in 0..m {
        t[[i, i]] = alpha[i];
        if i + 1 < m {
            t[[i, i + 1]] = beta[i];
            t[[i + 1, i]] = beta[i];
        }
    }
    let (vals, vecs) = eig_right(&t)?;
    let values = vals.to_vec();
    let target = ground_index(&values);
    Ok(Ritz { values, vectors: vecs, target })
}

fn combine(basis: &[Vec<C64>], coef: impl Iterator<Item = C64>) -> Vec<C64> {
    let mut x = vec![C64::new(0.0, 0.0); basis[0].len()];
    for (v, c) in basis.iter().zip(coef) {
        axpy(&mut x, c, v);
    }
    x
}

fn unit(mut x: Vec<C64>) -> Vec<C64> {
    let n = slice_norm(&x);
    if n > 0.0 {
        x.iter_mut().for_each(|z| *z /= n);
    }
    x
}

/// Smallest-Re eigenpair (ties to larger Im) of a complex-symmetric operator.
///
/// `start` seeds the first cycle; when absent a ChaCha-seeded random vector is used.
pub fn complex_symmetric_lanczos<A: LinearOperator + ?Sized>(
    a: &A,
    start: Option<&[C64]>,
    opts: &LanczosOptions,
) -> Result<LanczosResult> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x0 = match start {
        Some(s) if s.len() == n => {
            let scale = opts.start_mix * slice_norm(s) / (n as f64).sqrt();
            let r = random_vector(n, &mut rng);
            s.iter().zip(r).map(|(a, b)| a + b * scale).collect()
        }
        Some(s) => return Err(Error::DimensionMismatch(s.len(), n)),
        None => random_vector(n, &mut rng),
    };
    let m_cap = opts.max_krylov.clamp(1, n);
    let mut matvecs = 0usize;
    let mut cycles = 0usize;
    let mut breakdowns = 0usize;
    let mut best_resid = f64::INFINITY;
    let mut w = vec![C64::new(0.0, 0.0); n];

    loop {
        if matvecs >= opts.max_iter {
            return Err(Error::NoConvergence { iterations: matvecs, residual: best_resid });
        }
        cycles += 1;
        let q = slice_bilinear(&x0, &x0);
        let nrm = slice_norm(&x0);
        if nrm == 0.0 || q.abs() < opts.breakdown_guard * nrm * nrm {
            breakdowns += 1;
            if breakdowns > opts.restart_max {
                return Err(Error::QuasiNullBreakdown { restarts: opts.restart_max });
            }
            x0 = random_vector(n, &mut rng);
            continue;
        }
        let s = q.sqrt();
        let mut basis: Vec<Vec<C64>> = vec![x0.iter().map(|z| z / s).collect()];
        let mut alpha: Vec<C64> = Vec::with_capacity(m_cap);
        let mut beta: Vec<C64> = Vec::with_capacity(m_cap);
        let mut anorm = 0.0f64;
        let mut broke = false;

        for j in 0..m_cap {
            a.apply(&basis[j], &mut w);
            matvecs += 1;
            let mut aj = slice_bilinear(&basis[j], &w);
            axpy(&mut w, -aj, &basis[j]);
            if j > 0 {
                axpy(&mut w, -beta[j - 1], &basis[j - 1]);
            }
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = slice_bilinear(v, &w);
                    axpy(&mut w, -c, v);
                    if i == j {
                        aj += c;
                    }
                }
            }
            alpha.push(aj);
            anorm = anorm.max(aj.abs()).max(beta.last().map_or(0.0, |b| b.abs()));
            let nw = slice_norm(&w);
            let invariant = nw <= 1e-13 * anorm.max(1e-300);
            if invariant || j + 1 == m_cap || matvecs >= opts.max_iter {
                break;
            }
            let qw = slice_bilinear(&w, &w);
            if qw.abs() < opts.breakdown_guard * nw * nw {
                broke = true;
                break;
            }
            let b = qw.sqrt();
            beta.push(b);
            basis.push(w.iter().map(|z| z / b).collect());
        }

        if broke {
            breakdowns += 1;
            if breakdowns > opts.restart_max {
                return Err(Error::QuasiNullBreakdown { restarts: opts.restart_max });
            }
            x0 = random_vector(n, &mut rng);
            continue;
        }

        let r = ritz(&alpha, &beta)?;
        let t = r.target;
        let x = unit(combine(&basis, r.vectors.column(t).iter().copied()));
        a.apply(&x, &mut w);
        matvecs += 1;
        let xx = slice_bilinear(&x, &x);
        let theta = if xx.abs() > 1e-8 { slice_bilinear(&x, &w) / xx } else { r.values[t] };
        let resid = w.iter().zip(&x).map(|(ax, xi)| (ax - theta * xi).norm_sqr()).sum::<f64>().sqrt();
        best_resid = best_resid.min(resid);
        if resid < opts.tol_resid {
            let left = x.iter().map(|z| z / xx).collect();
            return Ok(LanczosResult {
                eigenvalue: theta,
                right: x,
                left,
                residual: resid,
                matvecs,
                cycles,
                breakdowns,
            });
        }

        // Restart from the target, keeping its approximate conjugate partner in the
        // space so the tie-break between pair members stays reachable.
        let th = r.values[t];
        let scale = r.values.iter().fold(1.0f64, |m, z| m.max(z.abs()));
        let partner = (0..r.values.len())
            .filter(|&i| i != t)
            .min_by(|&i, &k| (r.values[i] - th.conj()).abs().total_cmp(&(r.values[k] - th.conj()).abs()))
            .filter(|&i| {
                th.im.abs() > 1e-8 * scale
                    && (r.values[i] - th.conj()).abs() < (0.5 * th.im.abs()).min(1e-2 * scale)
            });
        x0 = x;
        if let Some(p) = partner {
            let y = unit(combine(&basis, r.vectors.column(p).iter().copied()));
            axpy(&mut x0, C64::new(1.0, 0.0), &y);
        }
    }
}
