//! Peak location and finite-size extrapolation.

use crate::error::{Error, Result};

/// Least-squares polynomial `Σ c_i x^i` of the given degree; returns `(coefficients, rms residual)`.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<(Vec<f64>, f64)> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::DimensionMismatch(n, y.len()));
    }
    if n < degree + 1 {
        return Err(Error::InsufficientSizes { need: degree + 1, got: n });
    }
    let m = degree + 1;
    // Normal equations on a column-scaled Vandermonde matrix.
    let xs = x.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut a = vec![vec![0.0; m + 1]; m];
    for (xi, yi) in x.iter().zip(y) {
        let t = xi / xs;
        let pw: Vec<f64> = (0..m).map(|i| t.powi(i as i32)).collect();
        for r in 0..m {
            for c in 0..m {
                a[r][c] += pw[r] * pw[c];
            }
            a[r][m] += pw[r] * yi;
        }
    }
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).expect("rows");
        a.swap(col, piv);
        let p = a[col][col];
        if p.abs() < 1e-300 {
            return Err(Error::InvalidParams("singular polynomial fit".into()));
        }
        for r in 0..m {
            if r != col {
                let f = a[r][col] / p;
                for c in col..=m {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..m).map(|i| a[i][m] / a[i][i] / xs.powi(i as i32)).collect();
    let rss: f64 = x.iter().zip(y).map(|(xi, yi)| (polyval(&coef, *xi) - yi).powi(2)).sum();
    Ok((coef, (rss / n as f64).sqrt()))
}

pub fn polyval(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Index of the largest finite value.
pub fn argmax(y: &[f64]) -> Option<usize> {
    y.iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

/// Interior strict local maxima (`y[i]` above both neighbours).
pub fn local_maxima(y: &[f64]) -> Vec<usize> {
    (1..y.len().saturating_sub(1)).filter(|&i| y[i] > y[i - 1] && y[i] > y[i + 1]).collect()
}

/// Parabolic refinement of a sampled maximum at index `i`; falls back to the sample at the edges.
pub fn refine_peak(x: &[f64], y: &[f64], i: usize) -> (f64, f64) {
    if i == 0 || i + 1 >= x.len() {
        return (x[i], y[i]);
    }
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let d1 = (y1 - y0) / (x1 - x0);
    let d2 = (y2 - y1) / (x2 - x1);
    let a = (d2 - d1) / (x2 - x0);
    if !(a < 0.0) {
        return (x1, y1);
    }
    let b = d1 - a * (x0 + x1);
    let xs = (-b / (2.0 * a)).clamp(x0, x2);
    let ys = y1 + (xs - x1) * (d1 + a * (xs - x0));
    (xs, ys)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extrapolation {
    /// Fit value at `1/L = 0`.
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub residual: f64,
    /// Successive `Δ log(height) / Δ log(L)`.
    pub loglog_slopes: Vec<f64>,
}

/// Fit peak positions as a polynomial in `1/L` and report local log-log slopes of
/// the heights.
pub fn peak_and_extrapolate(sizes: &[usize], positions: &[f64], heights: &[f64], degree: usize) -> Result<Extrapolation> {
    if sizes.len() < 3 {
        return Err(Error::InsufficientSizes { need: 3, got: sizes.len() });
    }
    if sizes.len() != positions.len() || sizes.len() != heights.len() {
        return Err(Error::DimensionMismatch(sizes.len(), positions.len().min(heights.len())));
    }
    let inv: Vec<f64> = sizes.iter().map(|&l| 1.0 / l as f64).collect();
    let (coefficients, residual) = polyfit(&inv, positions, degree)?;
    let loglog_slopes = sizes
        .windows(2)
        .zip(heights.windows(2))
        .map(|(l, h)| (h[1].abs().ln() - h[0].abs().ln()) / ((l[1] as f64).ln() - (l[0] as f64).ln()))
        .collect();
    Ok(Extrapolation { intercept: coefficients[0], coefficients, residual, loglog_slopes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_in_inverse_size() {
        let sizes = [8, 10, 12, 14];
        let pos: Vec<f64> = sizes.iter().map(|&l| -1.0 + 2.0 / l as f64).collect();
        let ex = peak_and_extrapolate(&sizes, &pos, &[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert!((ex.intercept + 1.0).abs() < 1e-10);
        assert!(ex.residual < 1e-12);
    }

    #[test]
    fn parabola_vertex() {
        let x = [0.0, 0.1, 0.2];
        let y: Vec<f64> = x.iter().map(|t| 1.0 - (t - 0.13f64).powi(2)).collect();
        let (xs, ys) = refine_peak(&x, &y, 1);
        assert!((xs - 0.13).abs() < 1e-12 && (ys - 1.0).abs() < 1e-12);
    }

    #[test]
    fn needs_three_sizes() {
        assert!(matches!(
            peak_and_extrapolate(&[8, 10], &[0.0, 0.0], &[1.0, 1.0], 1),
            Err(Error::InsufficientSizes { .. })
        ));
    }
}
