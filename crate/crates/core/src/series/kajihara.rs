//! Kajihara's very-well-poised multiple series W^{M,N} and the normalized
//! W attached to a balanced parameter point.

use serde::{Deserialize, Serialize};

use super::{converged, sum_box, sum_shells, sum_shells_through, vandermonde_ratio, PochRatio, Powers, SeriesResult};
use crate::error::{QError, QResult};
use crate::jackson::BalancedParams;
use crate::qcore::{pinf, QContext, C64, ONE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KajiharaParams {
    pub x: Vec<C64>,
    pub a: C64,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub z: C64,
}

impl KajiharaParams {
    pub fn m(&self) -> usize {
        self.x.len()
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }
}

/// W^{M,N}(x; a; u; v; z), including the Vandermonde ratio Δ(xq^l)/Δ(x).
pub fn kajihara_w(p: &KajiharaParams, ctx: &QContext) -> QResult<SeriesResult> {
    let (m, n) = (p.m(), p.n());
    if m == 0 || p.u.len() != m + n {
        return Err(QError::Domain(format!("W^{{M,N}} needs M ≥ 1 and M+N u's; got M={m}, N={n}, {} u's", p.u.len())));
    }
    let q = ctx.q;
    let a = p.a;
    let ax: Vec<C64> = p.x.iter().map(|&xi| a * xi).collect();
    let mut lead: Vec<PochRatio> = ax.iter().map(|&c| PochRatio::new(vec![c], vec![], ctx)).collect();
    let mut per_i: Vec<PochRatio> = p
        .x
        .iter()
        .map(|&xi| {
            let num = p.u.iter().map(|&uj| xi * uj).collect();
            let mut den: Vec<C64> = p.x.iter().map(|&xj| q * xi / xj).collect();
            den.extend(p.v.iter().map(|&vk| a * q * xi / vk));
            PochRatio::new(num, den, ctx)
        })
        .collect();
    let mut global = PochRatio::new(p.v.clone(), p.u.iter().map(|&uj| a * q / uj).collect(), ctx);
    let mut zs = Powers::new(p.z);
    let x = p.x.clone();
    let mut term = |l: &[usize]| {
        let tot: usize = l.iter().sum();
        let mut t = zs.get(tot) * global.get(tot) * vandermonde_ratio(&x, l, ctx);
        for i in 0..m {
            t *= (ONE - ax[i] * ctx.qn((tot + l[i]) as i64)) / (ONE - ax[i]) * lead[i].get(tot) * per_i[i].get(l[i]);
        }
        t
    };
    if let Some(top) = p.v.iter().filter_map(|&vk| ctx.q_power_index(vk)).min() {
        return sum_shells_through(&mut term, m, top);
    }
    let box_bounds: Option<Vec<usize>> =
        p.x.iter().map(|&xi| p.u.iter().filter_map(|&uj| ctx.q_power_index(xi * uj)).min()).collect();
    if let Some(bounds) = box_bounds {
        return sum_box(&mut term, &bounds);
    }
    if p.z.norm() >= 1.0 {
        return Err(QError::Domain(format!("W^{{M,N}} needs |z| < 1 unless terminating, got |z| = {}", p.z.norm())));
    }
    converged(sum_shells(&mut term, m, ctx)?, "kajihara_W")
}

/// The series argument block of the normalized W: the W^{M,2} parameters.
pub(crate) fn w_series_params(bp: &BalancedParams, q: C64) -> KajiharaParams {
    let m = bp.m();
    let (a2, a3, b3) = (bp.a[m + 1], bp.a[m + 2], bp.b[m + 2]);
    KajiharaParams {
        x: bp.a[..m].to_vec(),
        a: q * b3 / (a2 * a3),
        u: bp.b[..m + 2].iter().map(|&bj| ONE / bj).collect(),
        v: vec![q * b3 / a2, q * b3 / a3],
        z: bp.a[m] / b3,
    }
}

/// The prefactored W of a balanced point; requires |a_{M+1}/b_{M+3}| < 1.
pub fn w_normalized(bp: &BalancedParams, ctx: &QContext) -> QResult<SeriesResult> {
    let m = bp.m();
    let q = ctx.q;
    let (a2, a3, b3) = (bp.a[m + 1], bp.a[m + 2], bp.b[m + 2]);
    let z = bp.a[m] / b3;
    if z.norm() >= 1.0 {
        return Err(QError::Domain(format!("W needs |a_(M+1)/b_(M+3)| < 1, got {}", z.norm())));
    }
    let mut pre = ONE;
    for &ai in &bp.a[..m] {
        pre *= pinf(&[q * ai / a2, q * ai / a3], ctx) / pinf(&[q * q * ai * b3 / (a2 * a3)], ctx);
    }
    for &bj in &bp.b[..m + 2] {
        pre *= pinf(&[q * q * bj * b3 / (a2 * a3)], ctx);
    }
    for &bj in &bp.b {
        pre /= pinf(&[q * bj / a2, q * bj / a3], ctx);
    }
    pre *= pinf(&[z, a2 / a3, a3 / a2], ctx) / (a3 - a2);
    let s = kajihara_w(&w_series_params(bp, q), ctx)?;
    Ok(SeriesResult { value: pre * s.value, ..s })
}
