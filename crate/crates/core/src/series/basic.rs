//! One-variable series: rφs, the very-well-poised _{r+1}W_r and the
//! bilateral ψ.

use super::{condition_of, converged, sum_shells, sum_shells_through, PochRatio, Powers, SeriesResult};
use crate::error::{QError, QResult};
use crate::qcore::{q_binom2, QContext, C64, ONE, ZERO};

fn terminating_index(params: &[C64], ctx: &QContext) -> Option<usize> {
    params.iter().filter_map(|&a| ctx.q_power_index(a)).min()
}

/// r φ s (upper; lower; z) with the [(−1)^l q^{binom(l,2)}]^{1+s−r} factor.
pub fn rphis(upper: &[C64], lower: &[C64], z: C64, ctx: &QContext) -> QResult<SeriesResult> {
    let e = 1 + lower.len() as i32 - upper.len() as i32;
    let mut lows = lower.to_vec();
    lows.push(ctx.q);
    let mut ratio = PochRatio::new(upper.to_vec(), lows, ctx);
    let mut zs = Powers::new(z);
    let mut term = |l: &[usize]| {
        let n = l[0];
        let mut t = ratio.get(n) * zs.get(n);
        if e != 0 {
            let sign = if n % 2 == 1 && e % 2 != 0 { -1.0 } else { 1.0 };
            t *= sign * q_binom2(n, ctx).powi(e);
        }
        t
    };
    if let Some(n) = terminating_index(upper, ctx) {
        return sum_shells_through(&mut term, 1, n);
    }
    if e < 0 || (e == 0 && z.norm() >= 1.0) {
        return Err(QError::Domain(format!("{}φ{} diverges at |z| = {}", upper.len(), lower.len(), z.norm())));
    }
    converged(sum_shells(&mut term, 1, ctx)?, "rphis")
}

/// _{r+1}W_r(a1; rest; z).
pub fn vwp_w(a1: C64, rest: &[C64], z: C64, ctx: &QContext) -> QResult<SeriesResult> {
    if (ONE - a1).norm() == 0.0 {
        return Err(QError::TermEvaluation { index: vec![0], msg: "1 − a1 vanishes".into() });
    }
    let mut num = vec![a1];
    num.extend_from_slice(rest);
    let mut den = vec![ctx.q];
    den.extend(rest.iter().map(|&r| ctx.q * a1 / r));
    let mut ratio = PochRatio::new(num, den, ctx);
    let mut zs = Powers::new(z);
    let mut term = |l: &[usize]| {
        let n = l[0];
        (ONE - a1 * ctx.qn(2 * n as i64)) / (ONE - a1) * ratio.get(n) * zs.get(n)
    };
    if let Some(n) = terminating_index(rest, ctx) {
        return sum_shells_through(&mut term, 1, n);
    }
    if z.norm() >= 1.0 {
        return Err(QError::Domain(format!("very-well-poised series needs |z| < 1, got {}", z.norm())));
    }
    converged(sum_shells(&mut term, 1, ctx)?, "vwp_W")
}

/// Bilateral Σ_{l∈Z} (c)_l/(d)_l z^l on |∏d/∏c| < |z| < 1; the negative
/// half is summed as Σ_{l≥1} (q/d)_l/(q/c)_l (∏d/(∏c·z))^l.
pub fn bilateral_psi(upper: &[C64], lower: &[C64], z: C64, ctx: &QContext) -> QResult<SeriesResult> {
    if upper.len() != lower.len() {
        return Err(QError::Domain("bilateral series needs as many upper as lower parameters".into()));
    }
    let inner = lower.iter().product::<C64>() / upper.iter().product::<C64>();
    if !(inner.norm() < z.norm() && z.norm() < 1.0) {
        return Err(QError::Domain(format!(
            "bilateral series needs {:.6} < |z| < 1, got |z| = {:.6}",
            inner.norm(),
            z.norm()
        )));
    }
    let mut pos = PochRatio::new(upper.to_vec(), lower.to_vec(), ctx);
    let mut zs = Powers::new(z);
    let positive = converged(sum_shells(&mut |l| pos.get(l[0]) * zs.get(l[0]), 1, ctx)?, "bilateral ψ (l ≥ 0)")?;
    let mut neg = PochRatio::new(
        lower.iter().map(|&d| ctx.q / d).collect(),
        upper.iter().map(|&c| ctx.q / c).collect(),
        ctx,
    );
    let mut ws = Powers::new(inner / z);
    let negative = converged(
        sum_shells(&mut |l| if l[0] == 0 { ZERO } else { neg.get(l[0]) * ws.get(l[0]) }, 1, ctx)?,
        "bilateral ψ (l < 0)",
    )?;
    let value = positive.value + negative.value;
    let absolute = positive.condition * positive.value.norm() + negative.condition * negative.value.norm();
    Ok(SeriesResult {
        value,
        condition: condition_of(value, absolute),
        shells_used: positive.shells_used.max(negative.shells_used),
        converged: true,
        last_shell_magnitude: positive.last_shell_magnitude.max(negative.last_shell_magnitude),
    })
}
