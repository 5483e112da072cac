//! Adaptive Gauss–Kronrod quadrature and the complete elliptic integrals built on it.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// `∫_a^b f` by recursive bisection until each panel's Kronrod/Gauss gap is below
/// its share of `tol` or at the roundoff level of the panel value.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = kronrod15(f, a, b);
        // Without the roundoff floor a halving tolerance is unreachable on smooth panels
        // and the recursion becomes exponential near an integrable singularity.
        if err <= tol || err <= 50.0 * f64::EPSILON * v.abs() || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    rec(&f, a, b, tol, 40)
}

const ELLIPTIC_TOL: f64 = 1e-13;

/// Complete elliptic integral of the first kind in parameter form, `K(y) = ∫₀^{π/2} (1 − y sin²z)^{−1/2} dz`.
pub fn elliptic_k(y: f64) -> Result<f64> {
    if !(y < 1.0) {
        return Err(Error::EllipticDomain(format!("K needs y < 1, got {y}")));
    }
    // `1 − y sin²z` written as `(1 − y) + y cos²z` keeps full relative precision near z = π/2.
    let ym = 1.0 - y;
    Ok(integrate(|z| 1.0 / (ym + y * z.cos().powi(2)).sqrt(), 0.0, FRAC_PI_2, ELLIPTIC_TOL))
}

/// Complete elliptic integral of the third kind, `Π(x, y) = ∫₀^{π/2} [(1 − x sin²z)√(1 − y sin²z)]^{−1} dz`.
pub fn elliptic_pi(x: f64, y: f64) -> Result<f64> {
    if !(y < 1.0) || !(x < 1.0) {
        return Err(Error::EllipticDomain(format!("Π needs x, y < 1, got ({x}, {y})")));
    }
    let (xm, ym) = (1.0 - x, 1.0 - y);
    Ok(integrate(
        |z| {
            let c2 = z.cos().powi(2);
            1.0 / ((xm + x * c2) * (ym + y * c2).sqrt())
        },
        0.0,
        FRAC_PI_2,
        ELLIPTIC_TOL,
    ))
}
