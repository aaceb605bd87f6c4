//! Extrapolation used by the limit-kind cases.

use crate::error::{QError, QResult};
use crate::qcore::C64;

/// Neville–Aitken interpolation through (h_i, v_i), evaluated at h = 0.
pub fn neville_at_zero(h: &[f64], v: &[C64]) -> QResult<C64> {
    if h.is_empty() || h.len() != v.len() {
        return Err(QError::Domain("extrapolation needs as many nodes as values".into()));
    }
    let mut p = v.to_vec();
    let n = p.len();
    for k in 1..n {
        for i in 0..n - k {
            let d = h[i] - h[i + k];
            if d == 0.0 {
                return Err(QError::Domain("extrapolation nodes must be distinct".into()));
            }
            p[i] = (p[i + 1] * h[i] - p[i] * h[i + k]) / d;
        }
    }
    Ok(p[0])
}

/// Limit of a geometrically converging sequence and its empirical rate,
/// the exponent r with differences shrinking like |q|^{r·n}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolated {
    pub value: C64,
    pub rate: f64,
}

/// Aitken's Δ² on the last three values. Differences already at rounding
/// level count as an infinite rate.
pub fn geometric_limit(v: &[C64], q_abs: f64) -> QResult<Extrapolated> {
    let n = v.len();
    if n < 3 {
        return Err(QError::Domain("geometric extrapolation needs at least three values".into()));
    }
    let (x0, x1, x2) = (v[n - 3], v[n - 2], v[n - 1]);
    let (d1, d2) = (x1 - x0, x2 - x1);
    let scale = x2.norm().max(1e-300);
    if d1.norm() <= 1e-14 * scale || d2.norm() <= 1e-14 * scale {
        return Ok(Extrapolated { value: x2, rate: f64::INFINITY });
    }
    let rho = d2 / d1;
    let rate = rho.norm().ln() / q_abs.ln();
    let value = if (rho - 1.0).norm() < 1e-12 { x2 } else { x2 + d2 * rho / (1.0 - rho) };
    Ok(Extrapolated { value, rate })
}
