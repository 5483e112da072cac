//! Two-leg non-Hermitian SSH ladder with an imaginary sublattice potential.
//!
//! Bloch matrix `H_k = [[iu, η], [η*, −iu]]` with `η = −w − v1 e^{−ik} − v2 e^{ik}`;
//! energies `ε_± = ±√Δ_k` where `Δ_k = |η|² − u²`. The occupied band is `σ = −`.

use ndarray::{array, Array1, Array2};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::fidelity::{GroundPoint, PtClass};
use crate::linalg::{bilinear, eig_right, spectrum_order, C64};
use crate::quad::{elliptic_k, elliptic_pi};

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SshParams {
    pub w: f64,
    pub v1: f64,
    pub v2: f64,
    pub u: f64,
    /// Number of unit cells.
    pub l: usize,
}

impl SshParams {
    pub fn new(w: f64, v1: f64, v2: f64, u: f64, l: usize) -> Result<Self> {
        let p = Self { w, v1, v2, u, l };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.w, self.v1, self.v2, self.u].iter().all(|x| x.is_finite());
        if !finite || self.w <= 0.0 || self.u < 0.0 || self.l < 2 {
            return Err(Error::InvalidParams(format!(
                "SSH needs finite w > 0, u >= 0, L >= 2; got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn with_v1(self, v1: f64) -> Self {
        Self { v1, ..self }
    }

    pub fn with_u(self, u: f64) -> Self {
        Self { u, ..self }
    }

    /// Scale-relative threshold on `|Δ_k|` below which a momentum counts as exceptional.
    pub fn tol_delta(&self) -> f64 {
        1e-10 * (self.w * self.w + self.v1 * self.v1 + self.v2 * self.v2 + self.u * self.u)
    }

    /// Grid momenta `k_m = 2πm/L`.
    pub fn momenta(&self) -> Vec<f64> {
        (0..self.l).map(|m| TAU * m as f64 / self.l as f64).collect()
    }

    /// Same model in units of `w` (`w = 1`).
    fn reduced(&self) -> (f64, f64, f64) {
        (self.v1 / self.w, self.v2 / self.w, self.u / self.w)
    }
}

pub fn eta(k: f64, p: &SshParams) -> C64 {
    -p.w - p.v1 * C64::from_polar(1.0, -k) - p.v2 * C64::from_polar(1.0, k)
}

/// `Δ_k = v1² + v2² + w² + 2w(v1 + v2) cos k + 2 v1 v2 cos 2k − u²`.
pub fn delta(k: f64, p: &SshParams) -> f64 {
    let (w, v1, v2, u) = (p.w, p.v1, p.v2, p.u);
    v1 * v1 + v2 * v2 + w * w + 2.0 * w * (v1 + v2) * k.cos() + 2.0 * v1 * v2 * (2.0 * k).cos() - u * u
}

pub fn bloch_matrix(k: f64, p: &SshParams) -> Array2<C64> {
    let e = eta(k, p);
    array![[I * p.u, e], [e.conj(), -I * p.u]]
}

/// `∂H_k/∂v1`.
pub fn bloch_derivative_v1(k: f64) -> Array2<C64> {
    let z = C64::new(0.0, 0.0);
    array![[z, -C64::from_polar(1.0, -k)], [-C64::from_polar(1.0, k), z]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `Δ_k > 0`: real energies.
    Real,
    /// `Δ_k < 0`: conjugate imaginary energies.
    Broken,
    /// `|Δ_k|` below the exceptional-point tolerance.
    Exceptional,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    pub k: f64,
    pub eta: C64,
    pub delta: f64,
    /// `(ε_−, ε_+)`.
    pub energies: (C64, C64),
    pub branch: Branch,
}

pub fn band_point(k: f64, p: &SshParams) -> BandPoint {
    let d = delta(k, p);
    let branch = if d.abs() < p.tol_delta() {
        Branch::Exceptional
    } else if d > 0.0 {
        Branch::Real
    } else {
        Branch::Broken
    };
    let e = if d >= 0.0 { C64::new(d.sqrt(), 0.0) } else { C64::new(0.0, (-d).sqrt()) };
    BandPoint { k, eta: eta(k, p), delta: d, energies: (-e, e), branch }
}

/// Biorthonormal single-particle states at one momentum. Left entries are covectors
/// (`l H = ε l`), i.e. the complex conjugate of the bra-ket components.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleParticleStates {
    pub branch: Branch,
    pub energies: (C64, C64),
    pub left_minus: Array1<C64>,
    pub right_minus: Array1<C64>,
    pub left_plus: Array1<C64>,
    pub right_plus: Array1<C64>,
}

impl SingleParticleStates {
    pub fn band(&self, sigma: Band) -> (&Array1<C64>, &Array1<C64>) {
        match sigma {
            Band::Minus => (&self.left_minus, &self.right_minus),
            Band::Plus => (&self.left_plus, &self.right_plus),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Minus,
    Plus,
}

impl Band {
    fn sign(self) -> f64 {
        match self {
            Band::Minus => -1.0,
            Band::Plus => 1.0,
        }
    }
}

/// Closed-form eigenvectors on both sides of the exceptional momentum.
pub fn single_particle_states(k: f64, p: &SshParams) -> Result<SingleParticleStates> {
    let bp = band_point(k, p);
    let (d, u, e) = (bp.delta, p.u, bp.eta);
    let ec = e.conj();
    let make = |s: f64| -> (Array1<C64>, Array1<C64>) {
        match bp.branch {
            Branch::Real => {
                // ket |L_±⟩ = [iu ∓ √Δ, −η*]/√(2Δ); |R_±⟩ = [−iu ∓ √Δ, −η*]/(√2(±iu + √Δ))
                let sd = d.sqrt();
                let lket = array![I * u - s * sd, -ec] / C64::new((2.0 * d).sqrt(), 0.0);
                let r = array![-I * u - s * sd, -ec] / (2f64.sqrt() * (s * I * u + sd));
                (lket.mapv(|z| z.conj()), r)
            }
            _ => {
                // ket |L_±⟩ = ∓√(u/(−2Δ(u ± s))) [iu ± is, −η*]; |R_±⟩ = [−iu ∓ is, −η*]/√(2u(u ± s))
                let sq = (-d).sqrt();
                let pref = -s * (u / (-2.0 * d * (u + s * sq))).sqrt();
                let lket = array![I * u + s * I * sq, -ec] * pref;
                let r = array![-I * u - s * I * sq, -ec] / (2.0 * u * (u + s * sq)).sqrt();
                (lket.mapv(|z| z.conj()), r)
            }
        }
    };
    if bp.branch == Branch::Exceptional {
        return Err(Error::AtExceptionalMomentum { k, delta: d });
    }
    // In the broken branch the closed form loses precision as η → 0 (u ± √−Δ cancels);
    // there the numerically diagonalized 2×2 block is used instead.
    let cancels = |s: f64| bp.branch == Branch::Broken && (u + s * (-d).sqrt()).abs() < 1e-4 * u.abs();
    let numeric = |target: C64| -> Result<(Array1<C64>, Array1<C64>)> {
        let es = crate::biortho::biorthogonal_eig(&bloch_matrix(k, p))?;
        let j = if (es.eigenvalues[0] - target).norm() <= (es.eigenvalues[1] - target).norm() { 0 } else { 1 };
        Ok((es.left.row(j).to_owned(), es.right.column(j).to_owned()))
    };
    let (left_minus, right_minus) = if cancels(-1.0) { numeric(bp.energies.0)? } else { make(-1.0) };
    let (left_plus, right_plus) = if cancels(1.0) { numeric(bp.energies.1)? } else { make(1.0) };
    Ok(SingleParticleStates { branch: bp.branch, energies: bp.energies, left_minus, right_minus, left_plus, right_plus })
}

fn require_regular(k: f64, p: &SshParams) -> Result<f64> {
    let d = delta(k, p);
    if d.abs() < p.tol_delta() {
        return Err(Error::AtExceptionalMomentum { k, delta: d });
    }
    Ok(d)
}

/// `χ_k = [sin²k − u² + v2(cos k − cos 3k) + v2² sin² 2k] / (4Δ_k²)` for the `v1` direction
/// (written for `w = 1` and rescaled by `1/w²`).
pub fn chi_k_metricized(k: f64, p: &SshParams) -> Result<f64> {
    require_regular(k, p)?;
    let (_, v2, u) = p.reduced();
    let d = delta(k, p) / (p.w * p.w);
    let num = k.sin().powi(2) - u * u + v2 * (k.cos() - (3.0 * k).cos()) + v2 * v2 * (2.0 * k).sin().powi(2);
    Ok(num / (4.0 * d * d) / (p.w * p.w))
}

/// Right-right susceptibility per momentum for the `v1` direction.
pub fn chi_k_rr(k: f64, p: &SshParams) -> Result<f64> {
    let d_raw = require_regular(k, p)?;
    let (v1, v2, u) = p.reduced();
    let d = d_raw / (p.w * p.w);
    let (c, s) = (|n: f64| (n * k).cos(), |n: f64| (n * k).sin());
    let val = if d > 0.0 {
        let sd = d.sqrt();
        let eta2 = d + u * u;
        let u2 = u * u;
        let t1 = 4.0 * sd * u * v1 * v2 * s(2.0)
            + 4.0 * sd * u * v1 * s(1.0)
            + 2.0 * sd * u * v2 * v2 * s(4.0)
            + 4.0 * sd * u * v2 * s(3.0)
            + 2.0 * sd * u * s(2.0);
        let t2 = v2 * c(4.0) * (v2 * (-2.0 * u2 + v1 * v1 + 3.0) + 3.0 * v1 + v2.powi(3));
        let t3 = -c(1.0)
            * (4.0 * u2 * v1 + 2.0 * v1 * v1 * v2 + 2.0 * v1 * v2 * v2 + v1 + 4.0 * v2.powi(3) + 3.0 * v2);
        let inner = -2.0 * u2 * (2.0 * v1 * v2 + 1.0) + v1 * v1 - v1 * v2 * (v2 * v2 + 2.0) + v2 * v2 + 1.0;
        let t5 = c(3.0) * (v2 * (-4.0 * u2 + 2.0 * v1 * v1 + 3.0) - v1 * v2 * v2 + v1 + 3.0 * v2.powi(3));
        let rest = -v1 * v1 * (2.0 * u2 + v2 * v2 + 1.0) + v1 * v2.powi(3) * c(6.0)
            + v2 * v2 * c(5.0) * (3.0 * v1 + v2)
            - v1 * v2
            - (v2 * v2 + 4.0) * v2 * v2
            - 1.0;
        let omega = t1 + t2 + t3 + c(2.0) * inner + t5 + rest;
        -omega / (8.0 * d * eta2 * eta2)
    } else {
        if u <= 0.0 {
            return Err(Error::BrokenBranchZeroU);
        }
        let upsilon =
            -(2.0 * u * u + v2 * (v2 * c(4.0) - 2.0 * c(1.0) + 2.0 * c(3.0)) + c(2.0) - v2 * v2 - 1.0);
        upsilon / (8.0 * d * u * u)
    };
    Ok(val / (p.w * p.w))
}

/// Occupied-band ground state as a product over the momentum grid.
pub fn ground_point(p: &SshParams) -> Result<GroundPoint> {
    let mut factors = Vec::with_capacity(p.l);
    let mut pt = PtClass::Unbroken;
    for k in p.momenta() {
        let st = single_particle_states(k, p)?;
        if st.branch == Branch::Broken {
            pt = PtClass::Broken;
        }
        factors.push((st.left_minus, st.right_minus));
    }
    Ok(GroundPoint { factors, pt })
}

/// Occupied-band state at a single momentum.
pub fn k_ground_point(k: f64, p: &SshParams) -> Result<GroundPoint> {
    let st = single_particle_states(k, p)?;
    let pt = if st.branch == Branch::Broken { PtClass::Broken } else { PtClass::Unbroken };
    Ok(GroundPoint::single(st.left_minus, st.right_minus, pt))
}

/// Single-particle fidelity `f_k` of the occupied band between two parameter sets.
pub fn k_fidelity(k: f64, a: &SshParams, b: &SshParams) -> Result<C64> {
    let sa = single_particle_states(k, a)?;
    let sb = single_particle_states(k, b)?;
    Ok(bilinear(&sa.left_minus, &sb.right_minus) * bilinear(&sb.left_minus, &sa.right_minus))
}

/// Many-body metricized fidelity `Π_k f_k` between `v1_a` and `v1_b`, with per-k factors.
pub fn many_body_fidelity(p: &SshParams, v1_a: f64, v1_b: f64) -> Result<(C64, Vec<C64>)> {
    let (a, b) = (p.with_v1(v1_a), p.with_v1(v1_b));
    let per_k = p.momenta().into_iter().map(|k| k_fidelity(k, &a, &b)).collect::<Result<Vec<_>>>()?;
    Ok((per_k.iter().product(), per_k))
}

/// `Σ_k χ_k` with the per-momentum contributions.
pub fn chi_total(p: &SshParams) -> Result<(f64, Vec<f64>)> {
    let per_k = p.momenta().into_iter().map(|k| chi_k_metricized(k, p)).collect::<Result<Vec<_>>>()?;
    Ok((per_k.iter().sum(), per_k))
}

pub fn chi_total_rr(p: &SshParams) -> Result<f64> {
    p.momenta().into_iter().map(|k| chi_k_rr(k, p)).sum()
}

/// Finite-size PT class of the many-body ground state: broken iff some grid `Δ_k < 0`.
pub fn finite_size_pt(p: &SshParams) -> PtClass {
    if p.momenta().into_iter().any(|k| delta(k, p) < -p.tol_delta()) {
        PtClass::Broken
    } else {
        PtClass::Unbroken
    }
}

/// Roots in `cos k` of `Δ = 4v1v2 c² + 2w(v1 + v2) c + (v1 − v2)² + w² − u²`.
fn cos_roots(p: &SshParams) -> Vec<f64> {
    let a = 4.0 * p.v1 * p.v2;
    let b = 2.0 * p.w * (p.v1 + p.v2);
    let c0 = (p.v1 - p.v2).powi(2) + p.w * p.w - p.u * p.u;
    let scale = a.abs().max(b.abs()).max(c0.abs()).max(1e-300);
    let mut roots = Vec::new();
    if a.abs() < 1e-14 * scale {
        if b.abs() > 1e-14 * scale {
            roots.push(-c0 / b);
        }
    } else {
        let disc = b * b - 4.0 * a * c0;
        if disc >= 0.0 {
            // Numerically stable pair.
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            if q != 0.0 {
                roots.push(q / a);
                roots.push(c0 / q);
            } else {
                roots.push(0.0);
            }
        }
    }
    roots.retain(|c| (-1.0 - 1e-12..=1.0 + 1e-12).contains(c));
    roots.iter_mut().for_each(|c| *c = c.clamp(-1.0, 1.0));
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    roots
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpGeometry {
    /// Exceptional momenta in `[0, 2π)`, ascending.
    pub k_ep: Vec<f64>,
    /// `2π/|k_2 − k_1|` when exactly two exceptional momenta exist.
    pub l0: Option<f64>,
    /// `v1` on the two lines `v1 + v2 = w ± u` at the given `v2`.
    pub line_v1: (f64, f64),
}

/// Exceptional momenta from the quadratic in `cos k`.
pub fn ep_momenta(p: &SshParams) -> EpGeometry {
    let mut ks = Vec::new();
    for c in cos_roots(p) {
        let k = c.acos();
        ks.push(k);
        let k2 = TAU - k;
        if (k2 - k).abs() > 1e-14 && k2 < TAU {
            ks.push(k2);
        }
    }
    ks.sort_by(f64::total_cmp);
    ks.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    let l0 = if ks.len() == 2 { Some(TAU / (ks[1] - ks[0]).abs()) } else { None };
    EpGeometry { k_ep: ks, l0, line_v1: boundary_lines(p) }
}

/// `v1` values on the straight boundary lines `v1 + v2 = w ± u`.
pub fn boundary_lines(p: &SshParams) -> (f64, f64) {
    (p.w - p.u - p.v2, p.w + p.u - p.v2)
}

/// Thermodynamic PT class: broken iff `Δ_k < 0` somewhere on the Brillouin zone.
pub fn thermodynamic_pt(p: &SshParams) -> PtClass {
    let a = 4.0 * p.v1 * p.v2;
    let b = 2.0 * p.w * (p.v1 + p.v2);
    let c0 = (p.v1 - p.v2).powi(2) + p.w * p.w - p.u * p.u;
    let q = |c: f64| a * c * c + b * c + c0;
    let mut m = q(-1.0).min(q(1.0));
    if a > 0.0 {
        let cs = -b / (2.0 * a);
        if (-1.0..=1.0).contains(&cs) {
            m = m.min(q(cs));
        }
    }
    if m < 0.0 {
        PtClass::Broken
    } else {
        PtClass::Unbroken
    }
}

/// Bisect the thermodynamic PT boundary in `v1` inside `[lo, hi]`.
pub fn bisect_pt_boundary_v1(p: &SshParams, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let c_lo = thermodynamic_pt(&p.with_v1(lo));
    if c_lo == thermodynamic_pt(&p.with_v1(hi)) {
        return Err(Error::NoTransition);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if thermodynamic_pt(&p.with_v1(mid)) == c_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `v1` values where `Δ_k = 0` at fixed momentum: `Δ` is a quadratic in `v1`.
pub fn ep_v1_at_momentum(k: f64, p: &SshParams) -> Vec<f64> {
    let b = 2.0 * (p.w * k.cos() + p.v2 * (2.0 * k).cos());
    let c0 = p.v2 * p.v2 + p.w * p.w + 2.0 * p.w * p.v2 * k.cos() - p.u * p.u;
    let disc = b * b - 4.0 * c0;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let mut r = vec![0.5 * (-b - sq), 0.5 * (-b + sq)];
    r.dedup();
    r
}

/// `u` on the double-root locus of `Δ_k = 0` at `(v1, v2)`, when the double root lies
/// inside the zone: `u² = (v1 − v2)²(4v1v2 − w²)/(4v1v2)`.
pub fn discriminant_curve_u(w: f64, v1: f64, v2: f64) -> Option<f64> {
    let a = 4.0 * v1 * v2;
    if a.abs() < 1e-300 {
        return None;
    }
    let cstar = -w * (v1 + v2) / a;
    let u2 = (v1 - v2).powi(2) * (a - w * w) / a;
    ((-1.0..=1.0).contains(&cstar) && u2 >= 0.0).then(|| u2.sqrt())
}

/// Points `(k, v1, u)` where the `χ_k` numerator and `Δ_k` vanish together:
/// `v1 = −w(cos k + (v2/w) cos 2k)`, `u = w|sin k (1 + 2(v2/w) cos k)|`.
pub fn positive_divergence_curve(w: f64, v2: f64, ks: &[f64]) -> Vec<(f64, f64, f64)> {
    let t = v2 / w;
    ks.iter()
        .map(|&k| {
            let v1 = -w * (k.cos() + t * (2.0 * k).cos());
            let u = w * (k.sin() * (1.0 + 2.0 * t * k.cos())).abs();
            (k, v1, u)
        })
        .collect()
}

/// The golden-ratio (`v2 = (1+√5)/2`, `w = 1`) parametrization in its expanded form.
pub fn golden_curve_expanded(k: f64) -> (f64, f64) {
    let r5 = 5f64.sqrt();
    let v1 = -k.cos() - 0.5 * (1.0 + r5) * (2.0 * k).cos();
    let u2 = (4.0 + r5 + 2.0 * (1.0 + r5) * k.cos() + (3.0 + r5) * (2.0 * k).cos()) * k.sin().powi(2);
    (v1, u2.max(0.0).sqrt())
}

/// `v2 = 0` positive-divergence curve `u = √(w² − v1²)`.
pub fn positive_divergence_u_v2_zero(w: f64, v1: f64) -> Option<f64> {
    let u2 = w * w - v1 * v1;
    (u2 >= 0.0).then(|| u2.sqrt())
}

/// Open chain of `L` cells (`2L` orbitals, index `2j` = upper leg, `2j+1` = lower leg).
pub fn open_chain_matrix(p: &SshParams) -> Array2<C64> {
    let n = 2 * p.l;
    let mut h = Array2::<C64>::zeros((n, n));
    let mut hop = |a: usize, b: usize, t: f64| {
        h[[a, b]] += -t;
        h[[b, a]] += -t;
    };
    for j in 0..p.l {
        hop(2 * j, 2 * j + 1, p.w);
        if j + 1 < p.l {
            hop(2 * j, 2 * j + 3, p.v1);
            hop(2 * j + 1, 2 * j + 2, p.v2);
        }
    }
    for j in 0..p.l {
        h[[2 * j, 2 * j]] = I * p.u;
        h[[2 * j + 1, 2 * j + 1]] = -I * p.u;
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainEnd {
    Left,
    Right,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sublattice {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryMode {
    pub energy: C64,
    /// Fraction of `|R|²` in the outermost cells at both ends combined.
    pub edge_weight: f64,
    pub end: ChainEnd,
    pub sublattice: Sublattice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpenBoundaryReport {
    pub spectrum: Vec<C64>,
    pub modes: Vec<BoundaryMode>,
}

/// Cells counted as "outermost" at each end.
pub const EDGE_CELLS: usize = 4;
/// Minimum edge weight of a boundary mode.
pub const EDGE_WEIGHT: f64 = 0.9;

pub fn open_boundary_spectrum(p: &SshParams) -> Result<OpenBoundaryReport> {
    if p.l < 2 * EDGE_CELLS {
        return Err(Error::InvalidParams(format!("open chain needs L >= {}", 2 * EDGE_CELLS)));
    }
    let h = open_chain_matrix(p);
    let (vals, vecs) = eig_right(&h)?;
    let vals = vals.to_vec();
    let order = spectrum_order(&vals);
    let n = 2 * p.l;
    let mut modes = Vec::new();
    for &i in &order {
        let col = vecs.column(i);
        let tot: f64 = col.iter().map(|z| z.norm_sqr()).sum();
        let cell = |j: usize| (col[2 * j].norm_sqr(), col[2 * j + 1].norm_sqr());
        let (mut lu, mut ld, mut ru, mut rd) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..EDGE_CELLS {
            let (a, b) = cell(j);
            lu += a;
            ld += b;
            let (a, b) = cell(n / 2 - 1 - j);
            ru += a;
            rd += b;
        }
        let (left, right) = ((lu + ld) / tot, (ru + rd) / tot);
        if left + right < EDGE_WEIGHT {
            continue;
        }
        let end = if left >= EDGE_WEIGHT {
            ChainEnd::Left
        } else if right >= EDGE_WEIGHT {
            ChainEnd::Right
        } else {
            ChainEnd::Both
        };
        let sublattice = if lu + ru >= ld + rd { Sublattice::Upper } else { Sublattice::Lower };
        modes.push(BoundaryMode { energy: vals[i], edge_weight: left + right, end, sublattice });
    }
    Ok(OpenBoundaryReport { spectrum: order.into_iter().map(|i| vals[i]).collect(), modes })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerryPhase {
    /// Richardson-extrapolated value, real part wrapped into `[−π/2, 3π/2)`.
    pub value: C64,
    /// `|γ(2N) − γ(N)|`, the discretization error estimate.
    pub richardson_error: f64,
}

pub const BERRY_GRID: usize = 4096;

fn wrap_real(z: C64) -> C64 {
    C64::new((z.re + 0.5 * PI).rem_euclid(TAU) - 0.5 * PI, z.im)
}

fn berry_sum(p: &SshParams, band: Band, n: usize) -> Result<C64> {
    let mut states = Vec::with_capacity(n);
    let mut branch = None;
    for j in 0..n {
        let k = TAU * j as f64 / n as f64;
        let st = single_particle_states(k, p).map_err(|_| Error::GridCrossesEp)?;
        if *branch.get_or_insert(st.branch) != st.branch {
            return Err(Error::GridCrossesEp);
        }
        let (l, r) = st.band(band);
        states.push((l.clone(), r.clone()));
    }
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        let (lj, rj) = &states[j];
        let (ln, rn) = &states[(j + 1) % n];
        acc += 0.5 * (bilinear(lj, rn).ln() - bilinear(ln, rj).ln());
    }
    Ok(I * acc)
}

/// Complex Berry phase `∮ i⟨L|∂_k R⟩ dk` of one band on an `n`-point loop, with a
/// Richardson step at `2n`.
pub fn complex_berry_phase_numeric(p: &SshParams, band: Band, n: usize) -> Result<BerryPhase> {
    let g1 = berry_sum(p, band, n)?;
    let g2 = berry_sum(p, band, 2 * n)?;
    let value = (4.0 * g2 - g1) / 3.0;
    Ok(BerryPhase { value: wrap_real(value), richardson_error: (g2 - g1).norm() })
}

/// Closed form for `v2 = 0`:
/// `γ_± = πΘ(v1/w − 1) ± i (u/2w) √(yw/v1) [K(y) + (v1 − w)/(v1 + w) Π(x, y)]`,
/// `x = 4t/(t+1)²`, `y = 4t/((t+1)² − u²/w²)`, `t = v1/w`.
///
/// The sign of the imaginary part is the one produced by the connection
/// `i⟨L|∂_k R⟩` on the loop `k: 0 → 2π` with `η = −w − v1 e^{−ik}`.
pub fn complex_berry_phase_analytic(p: &SshParams, band: Band) -> Result<C64> {
    if p.v2 != 0.0 {
        return Err(Error::InvalidParams("analytic Berry phase needs v2 = 0".into()));
    }
    if p.v1 <= 0.0 {
        return Err(Error::InvalidParams("analytic Berry phase needs v1 > 0".into()));
    }
    let t = p.v1 / p.w;
    let uw = p.u / p.w;
    let x = 4.0 * t / (t + 1.0).powi(2);
    let y = 4.0 * t / ((t + 1.0).powi(2) - uw * uw);
    if !(0.0..1.0).contains(&y) {
        return Err(Error::EllipticDomain(format!("y = {y} (PT-broken or boundary point)")));
    }
    let theta = if t > 1.0 {
        1.0
    } else if t < 1.0 {
        0.0
    } else {
        0.5
    };
    let im = if p.u == 0.0 {
        0.0
    } else {
        let bracket = elliptic_k(y)? + (p.v1 - p.w) / (p.v1 + p.w) * elliptic_pi(x, y)?;
        band.sign() * uw / 2.0 * (y * p.w / p.v1).sqrt() * bracket
    };
    Ok(C64::new(PI * theta, im))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v1: f64, v2: f64, u: f64) -> SshParams {
        SshParams::new(1.0, v1, v2, u, 101).unwrap()
    }

    #[test]
    fn bloch_examples() {
        let h = bloch_matrix(0.7, &p(0.0, 0.0, 0.0));
        assert!((h[[0, 1]] - C64::new(-1.0, 0.0)).norm() < 1e-15);
        let h = bloch_matrix(PI, &p(1.0, 0.0, 0.09));
        assert!(h[[0, 1]].norm() < 1e-15);
        assert!((h[[0, 0]] - C64::new(0.0, 0.09)).norm() < 1e-15);
    }

    #[test]
    fn delta_matches_eta() {
        for &k in &[0.0, 0.4, 2.0, 3.3, 5.9] {
            let q = p(0.8, 1.3, 0.2);
            assert!((delta(k, &q) - (eta(k, &q).norm_sqr() - 0.04)).abs() < 1e-12);
        }
    }

    #[test]
    fn ep_linear_case() {
        let q = p(1.0, 0.0, 0.2);
        let g = ep_momenta(&q);
        assert_eq!(g.k_ep.len(), 2);
        for k in &g.k_ep {
            assert!((k.cos() + 0.98).abs() < 1e-14);
            assert!(delta(*k, &q).abs() < 1e-12);
        }
        assert!((g.k_ep[0] + g.k_ep[1] - TAU).abs() < 1e-12);
    }

    #[test]
    fn hermitian_gap_closing_line() {
        let q = p(0.3, 0.7, 0.0);
        let g = ep_momenta(&q);
        assert!(g.k_ep.iter().any(|k| (k - PI).abs() < 1e-7));
    }

    #[test]
    fn chi_k_hermitian_example() {
        let v = chi_k_metricized(PI / 2.0, &p(1.0, 0.0, 0.0)).unwrap();
        assert!((v - 1.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn divergence_curve_v2_zero() {
        assert!((positive_divergence_u_v2_zero(1.0, 0.6).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(positive_divergence_u_v2_zero(1.0, 1.0).unwrap(), 0.0);
    }
}
