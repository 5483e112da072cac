//! Fidelity definitions, susceptibilities and the one-half exceptional-point test.

use ndarray::{Array1, Array2, ArrayBase, Data, Ix1};
use std::fmt;
use std::str::FromStr;

use crate::biortho::BiorthogonalEigensystem;
use crate::error::{Error, Result};
use crate::linalg::{bilinear, inner, norm2, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Definition {
    /// `⟨L_a|R_b⟩⟨L_b|R_a⟩`.
    #[default]
    Metricized,
    /// `|⟨R_a|R_b⟩|²` with unit right vectors.
    RightRight,
    /// `½ |⟨L_a|R_b⟩ + ⟨R_a|L_b⟩|`.
    LrHalfSum,
    /// `√|⟨L_a|R_b⟩⟨L_b|R_a⟩|`.
    LrSqrtAbs,
    /// Principal `√(⟨L_a|R_b⟩⟨L_b|R_a⟩)`.
    LrSqrt,
}

impl Definition {
    pub const ALL: [Definition; 5] = [
        Definition::Metricized,
        Definition::RightRight,
        Definition::LrHalfSum,
        Definition::LrSqrtAbs,
        Definition::LrSqrt,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Definition::Metricized => "metricized",
            Definition::RightRight => "RR",
            Definition::LrHalfSum => "LR-half-sum",
            Definition::LrSqrtAbs => "LR-sqrt-abs",
            Definition::LrSqrt => "LR-sqrt",
        }
    }
}

impl fmt::Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Definition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Definition::ALL
            .into_iter()
            .find(|d| d.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParams(format!("unknown fidelity definition '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PtClass {
    Unbroken,
    Broken,
}

impl PtClass {
    pub fn from_energy(e: C64, tol_real: f64) -> Self {
        if e.im.abs() < tol_real {
            PtClass::Unbroken
        } else {
            PtClass::Broken
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            PtClass::Unbroken => "unbroken",
            PtClass::Broken => "broken",
        }
    }
}

/// One fidelity evaluation between `lambda` and `lambda + epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityRecord {
    pub lambda: f64,
    pub epsilon: f64,
    pub f: C64,
    pub chi_fd: C64,
    pub definition: Definition,
    pub pt_a: PtClass,
    pub pt_b: PtClass,
}

impl FidelityRecord {
    pub fn new(lambda: f64, epsilon: f64, f: C64, definition: Definition, pt_a: PtClass, pt_b: PtClass) -> Self {
        Self { lambda, epsilon, f, chi_fd: chi_finite_difference(f, epsilon), definition, pt_a, pt_b }
    }

    pub fn straddles(&self) -> bool {
        self.pt_a != self.pt_b
    }
}

fn check_dims(lens: [usize; 4]) -> Result<()> {
    for &n in &lens[1..] {
        if n != lens[0] {
            return Err(Error::DimensionMismatch(lens[0], n));
        }
    }
    Ok(())
}

/// `⟨L_a|R_b⟩⟨L_b|R_a⟩` with bilinear overlaps (left covectors as stored rows).
pub fn metricized_fidelity<S1, S2, S3, S4>(
    la: &ArrayBase<S1, Ix1>,
    ra: &ArrayBase<S2, Ix1>,
    lb: &ArrayBase<S3, Ix1>,
    rb: &ArrayBase<S4, Ix1>,
) -> Result<C64>
where
    S1: Data<Elem = C64>,
    S2: Data<Elem = C64>,
    S3: Data<Elem = C64>,
    S4: Data<Elem = C64>,
{
    check_dims([la.len(), ra.len(), lb.len(), rb.len()])?;
    Ok(bilinear(la, rb) * bilinear(lb, ra))
}

/// The three overlaps every tabulated definition is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlaps {
    /// `⟨L_a|R_b⟩`
    pub ab: C64,
    /// `⟨L_b|R_a⟩`
    pub ba: C64,
    /// `⟨R_a|R_b⟩` between unit right vectors.
    pub rr: C64,
}

impl Overlaps {
    pub fn of<S1, S2, S3, S4>(
        la: &ArrayBase<S1, Ix1>,
        ra: &ArrayBase<S2, Ix1>,
        lb: &ArrayBase<S3, Ix1>,
        rb: &ArrayBase<S4, Ix1>,
    ) -> Result<Self>
    where
        S1: Data<Elem = C64>,
        S2: Data<Elem = C64>,
        S3: Data<Elem = C64>,
        S4: Data<Elem = C64>,
    {
        check_dims([la.len(), ra.len(), lb.len(), rb.len()])?;
        let rr = inner(ra, rb) / (norm2(ra) * norm2(rb));
        Ok(Self { ab: bilinear(la, rb), ba: bilinear(lb, ra), rr })
    }

    /// Overlaps of a tensor product are products of the factor overlaps.
    pub fn combine(self, other: Self) -> Self {
        Self { ab: self.ab * other.ab, ba: self.ba * other.ba, rr: self.rr * other.rr }
    }

    pub fn fidelity(&self, def: Definition) -> C64 {
        let m = self.ab * self.ba;
        match def {
            Definition::Metricized => m,
            Definition::RightRight => C64::new(self.rr.norm_sqr(), 0.0),
            // ⟨R_a|L_b⟩ with the ket |L_b⟩ = conj(l_b) is conj(l_b · r_a).
            Definition::LrHalfSum => C64::new(0.5 * (self.ab + self.ba.conj()).norm(), 0.0),
            Definition::LrSqrtAbs => C64::new(m.norm().sqrt(), 0.0),
            Definition::LrSqrt => m.sqrt(),
        }
    }
}

/// Evaluates one of the tabulated fidelity definitions.
pub fn fidelity_variant<S1, S2, S3, S4>(
    def: Definition,
    la: &ArrayBase<S1, Ix1>,
    ra: &ArrayBase<S2, Ix1>,
    lb: &ArrayBase<S3, Ix1>,
    rb: &ArrayBase<S4, Ix1>,
) -> Result<C64>
where
    S1: Data<Elem = C64>,
    S2: Data<Elem = C64>,
    S3: Data<Elem = C64>,
    S4: Data<Elem = C64>,
{
    Ok(Overlaps::of(la, ra, lb, rb)?.fidelity(def))
}

/// `(1 − F)/ε²`.
pub fn chi_finite_difference(f: C64, epsilon: f64) -> C64 {
    (C64::new(1.0, 0.0) - f) / (epsilon * epsilon)
}

/// Smallest `|E_0 − E_n|` below which perturbative sums are refused.
pub const DEGENERACY_GUARD: f64 = 1e-12;

struct Couplings {
    /// `⟨L_0|V|R_n⟩`
    left: Array1<C64>,
    /// `⟨L_n|V|R_0⟩`
    right: Array1<C64>,
    gaps: Vec<C64>,
}

fn couplings(es: &BiorthogonalEigensystem, v: &Array2<C64>, g: usize) -> Result<Couplings> {
    let n = es.dim();
    if v.dim() != (n, n) {
        return Err(Error::DimensionMismatch(v.nrows(), n));
    }
    if g >= n {
        return Err(Error::InvalidParams(format!("ground index {g} out of range")));
    }
    let l0v = es.left_vector(g).dot(v);
    let vr0 = v.dot(&es.right_vector(g));
    let left = l0v.dot(&es.right);
    let right = es.left.dot(&vr0);
    let e0 = es.eigenvalues[g];
    let gaps: Vec<C64> = es.eigenvalues.iter().map(|e| e0 - e).collect();
    let min_gap = gaps
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != g)
        .map(|(_, z)| z.norm())
        .fold(f64::INFINITY, f64::min);
    if min_gap < DEGENERACY_GUARD {
        return Err(Error::DegenerateDenominator { gap: min_gap });
    }
    Ok(Couplings { left, right, gaps })
}

/// `Σ_{n≠0} ⟨L_0|V|R_n⟩⟨L_n|V|R_0⟩ / (E_0 − E_n)²`.
pub fn chi_perturbative(es: &BiorthogonalEigensystem, v: &Array2<C64>, g: usize) -> Result<C64> {
    let c = couplings(es, v, g)?;
    Ok((0..es.dim())
        .filter(|&n| n != g)
        .map(|n| c.left[n] * c.right[n] / (c.gaps[n] * c.gaps[n]))
        .sum())
}

/// Second-order energy shift `Σ_{n≠0} ⟨L_0|V|R_n⟩⟨L_n|V|R_0⟩ / (E_0 − E_n)`.
pub fn second_order_energy(es: &BiorthogonalEigensystem, v: &Array2<C64>, g: usize) -> Result<C64> {
    let c = couplings(es, v, g)?;
    Ok((0..es.dim()).filter(|&n| n != g).map(|n| c.left[n] * c.right[n] / c.gaps[n]).sum())
}

/// Right-right susceptibility: with `|w⟩ = Σ_{n≠0} c_n |R_n⟩`, `c_n = ⟨L_n|V|R_0⟩/(E_0 − E_n)`,
/// the double sum collapses to `⟨w|w⟩ − |⟨R_0|w⟩|²` for unit `|R_0⟩`.
pub fn chi_rr_perturbative(es: &BiorthogonalEigensystem, v: &Array2<C64>, g: usize) -> Result<C64> {
    let c = couplings(es, v, g)?;
    let n = es.dim();
    let mut w = Array1::<C64>::zeros(n);
    for m in (0..n).filter(|&m| m != g) {
        let cm = c.right[m] / c.gaps[m];
        w.scaled_add(cm, &es.right_vector(m));
    }
    let r0 = es.right_vector(g);
    let r0n = norm2(&r0);
    let proj = inner(&r0, &w) / r0n;
    Ok(C64::new(norm2(&w).powi(2) - proj.norm_sqr(), 0.0))
}

/// `(χ + χ̄)/2` where `χ̄` comes from the PT partner; requires `χ̄ ≈ χ*`.
pub fn chi_real_part(chi: C64, chi_partner: C64, tol: f64) -> Result<f64> {
    let deviation = (chi_partner - chi.conj()).norm();
    let scale = chi.norm().max(1.0);
    if deviation > tol * scale {
        return Err(Error::PartnerMismatch { deviation });
    }
    Ok(0.5 * (chi + chi_partner).re)
}

/// A ground state as a product of factors; a plain state has one factor.
#[derive(Debug, Clone)]
pub struct GroundPoint {
    /// `(left covector, right vector)` per factor.
    pub factors: Vec<(Array1<C64>, Array1<C64>)>,
    pub pt: PtClass,
}

impl GroundPoint {
    pub fn single(left: Array1<C64>, right: Array1<C64>, pt: PtClass) -> Self {
        Self { factors: vec![(left, right)], pt }
    }
}

/// Factor-wise overlaps of two product states.
pub fn product_overlaps(a: &GroundPoint, b: &GroundPoint) -> Result<Overlaps> {
    if a.factors.len() != b.factors.len() {
        return Err(Error::DimensionMismatch(a.factors.len(), b.factors.len()));
    }
    let one = C64::new(1.0, 0.0);
    let mut acc = Overlaps { ab: one, ba: one, rr: one };
    for ((la, ra), (lb, rb)) in a.factors.iter().zip(&b.factors) {
        acc = acc.combine(Overlaps::of(la, ra, lb, rb)?);
    }
    Ok(acc)
}

/// Metricized fidelity of two product states, factor by factor.
pub fn product_fidelity(a: &GroundPoint, b: &GroundPoint) -> Result<C64> {
    Ok(product_overlaps(a, b)?.fidelity(Definition::Metricized))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneHalfReport {
    pub lambda_ep: f64,
    /// `(ε, Re F)` for each step of the schedule.
    pub trace: Vec<(f64, f64)>,
    /// Nearest `n` with `Re F ≈ (1/2)^n` at the smallest ε.
    pub order: u32,
    /// `|Re F − (1/2)^n|` at the smallest ε.
    pub deviation: f64,
    pub is_second_order: bool,
}

pub const DEFAULT_EPSILON_SCHEDULE: [f64; 3] = [1e-2, 1e-3, 1e-4];
pub const DEFAULT_TOL_HALF: f64 = 5e-3;

/// One-half test across a PT transition bracketed by `[lo, hi]`.
///
/// The transition is taken at the bracket midpoint; the unbroken endpoint sits `a·ε`
/// away from it and the broken endpoint `b·ε` on the other side. Every ε in the
/// schedule must still straddle, otherwise the bracket is too wide for it.
pub fn one_half_ep_test<M>(
    model: M,
    lo: f64,
    hi: f64,
    schedule: &[f64],
    a: f64,
    b: f64,
    tol_half: f64,
) -> Result<OneHalfReport>
where
    M: Fn(f64) -> Result<GroundPoint>,
{
    if !(a > 0.0 && b > 0.0) || schedule.is_empty() {
        return Err(Error::InvalidParams("one-half test needs a, b > 0 and a non-empty schedule".into()));
    }
    let p_lo = model(lo)?.pt;
    let p_hi = model(hi)?.pt;
    if p_lo == p_hi {
        return Err(Error::NoTransition);
    }
    let mid = 0.5 * (lo + hi);
    // Direction from the transition toward the unbroken side.
    let toward_unbroken = if p_lo == PtClass::Unbroken { -1.0 } else { 1.0 };
    let mut trace = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let pa = model(mid + toward_unbroken * a * eps)?;
        let pb = model(mid - toward_unbroken * b * eps)?;
        if pa.pt != PtClass::Unbroken || pb.pt != PtClass::Broken {
            return Err(Error::BracketTooWide { epsilon: eps });
        }
        trace.push((eps, product_fidelity(&pa, &pb)?.re));
    }
    let last = trace.last().expect("non-empty schedule").1;
    let order = if last > 0.0 { (-last.log2()).round().max(0.0) as u32 } else { 0 };
    let deviation = (last - 0.5f64.powi(order as i32)).abs();
    let is_second_order = order == 1 && deviation < tol_half;
    Ok(OneHalfReport { lambda_ep: mid, trace, order, deviation, is_second_order })
}
