//! Series solutions of the degenerate system obtained from q-RP^M by
//! sending a_{M+3} → ∞ and then a_{M+2} → 0.

use serde::Serialize;

use super::{converged, sum_shells, vandermonde_ratio, PochRatio, Powers, SeriesResult};
use crate::error::{QError, QResult};
use crate::qcore::{pinf, q_binom2, LatticePower, QContext, C64, ONE};

/// Parameters a_1..a_{M+1}, b_1..b_{M+1} and the exponent λ, together with
/// the fractional powers the solutions carry. The powers are principal at
/// the base point and follow exact q-power steps under shifts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneParams {
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub lambda: C64,
    pub qlambda: C64,
    /// (1/a_{M+1})^{λ+1}.
    pub inv_power: C64,
    /// (q/a_j)^λ for j = 1..M+1.
    pub tau_powers: Vec<C64>,
}

impl DegeneParams {
    pub fn new(a: Vec<C64>, b: Vec<C64>, lambda: C64, ctx: &QContext) -> QResult<Self> {
        if a.len() < 2 || a.len() != b.len() {
            return Err(QError::Domain("degenerate system needs M+1 ≥ 2 a's and as many b's".into()));
        }
        let m = a.len() - 1;
        let inv_power = LatticePower::principal(ONE / a[m], lambda + 1.0, ctx).base_value;
        let tau_powers = a.iter().map(|&aj| LatticePower::principal(ctx.q / aj, lambda, ctx).base_value).collect();
        Ok(DegeneParams { a, b, lambda, qlambda: ctx.qpow(lambda), inv_power, tau_powers })
    }

    pub fn m(&self) -> usize {
        self.a.len() - 1
    }

    /// q^β = a_1⋯a_{M+1} / (q^{λ+2} b_1⋯b_{M+1}).
    pub fn q_beta(&self, ctx: &QContext) -> C64 {
        self.a.iter().product::<C64>() / (self.qlambda * ctx.q * ctx.q * self.b.iter().product::<C64>())
    }

    /// The point with a_i → a_i q^{da_i}, b_i → b_i q^{db_i}.
    pub fn shifted(&self, da: &[i64], db: &[i64], ctx: &QContext) -> Self {
        let m = self.m();
        let mut p = self.clone();
        for i in 0..=m {
            p.a[i] *= ctx.qn(da[i]);
            p.b[i] *= ctx.qn(db[i]);
            p.tau_powers[i] *= self.qlambda.powi(-da[i] as i32);
        }
        p.inv_power *= (self.qlambda * ctx.q).powi(-da[m] as i32);
        p
    }
}

fn prefactor(k: usize, p: &DegeneParams, ctx: &QContext) -> C64 {
    let m = p.m();
    let q = ctx.q;
    let (am, ql) = (p.a[m], p.qlambda);
    let mut pre = p.inv_power;
    match k {
        1 => {
            for &ai in &p.a[..m] {
                pre *= pinf(&[q * ai / am], ctx) / pinf(&[ql * q * q * ai / am], ctx);
            }
            for &bj in &p.b {
                pre *= pinf(&[ql * q * q * bj / am], ctx) / pinf(&[q * bj / am], ctx);
            }
        }
        _ => {
            if k == 3 {
                pre *= pinf(&[ql * q * q * p.b[m] / am], ctx) / pinf(&[ql * q], ctx);
            }
            for &ai in &p.a[..m] {
                pre *= pinf(&[q * ai / am], ctx);
            }
            for &bj in &p.b {
                pre /= pinf(&[q * bj / am], ctx);
            }
        }
    }
    pre
}

/// The multiple series of solution family k without its prefactor.
pub fn degene_family_sum(k: usize, p: &DegeneParams, ctx: &QContext) -> QResult<SeriesResult> {
    let m = p.m();
    let q = ctx.q;
    let (am, ql) = (p.a[m], p.qlambda);
    let qb = p.q_beta(ctx);
    let ai: Vec<C64> = p.a[..m].to_vec();
    let a_all = p.a.clone();
    let ratio_i = |bs: &[C64]| -> Vec<PochRatio> {
        ai.iter()
            .map(|&x| {
                PochRatio::new(bs.iter().map(|&bj| x / bj).collect(), a_all.iter().map(|&aj| q * x / aj).collect(), ctx)
            })
            .collect()
    };
    let r = match k {
        1 => {
            let mut zs = Powers::new(q / am);
            let mut global =
                PochRatio::new(vec![ql * q], p.b.iter().map(|&bj| ql * q * q * bj / am).collect(), ctx);
            let mut lead: Vec<PochRatio> = ai.iter().map(|&x| PochRatio::new(vec![ql * q * x / am], vec![], ctx)).collect();
            let mut per_i = ratio_i(&p.b);
            let mut ws: Vec<Powers> = ai.iter().map(|&x| Powers::new(x / qb)).collect();
            let mut term = |l: &[usize]| {
                let n: usize = l.iter().sum();
                let mut t = zs.get(n) * q_binom2(n, ctx) * vandermonde_ratio(&ai, l, ctx) * global.get(n);
                for i in 0..m {
                    let w = ql * q * ai[i] / am;
                    t *= (ONE - w * ctx.qn((n + l[i]) as i64)) / (ONE - w)
                        * lead[i].get(n)
                        * per_i[i].get(l[i])
                        * ws[i].get(l[i])
                        * q_binom2(l[i], ctx);
                }
                t
            };
            sum_shells(&mut term, m, ctx)?
        }
        2 => {
            if (ONE / qb).norm() >= 1.0 {
                return Err(QError::Domain(format!("degenerate family 2 needs |q^-β| < 1, got {}", (ONE / qb).norm())));
            }
            let mut zs = Powers::new(ONE / qb);
            let mut per_i = ratio_i(&p.b);
            let mut term = |l: &[usize]| {
                let n: usize = l.iter().sum();
                let mut t = zs.get(n) * vandermonde_ratio(&ai, l, ctx);
                for i in 0..m {
                    t *= per_i[i].get(l[i]);
                }
                t
            };
            sum_shells(&mut term, m, ctx)?
        }
        3 => {
            let bm = p.b[m];
            let mut zs = Powers::new(ONE / bm);
            let mut global = PochRatio::new(vec![q * bm / am], vec![ql * q * q * bm / am], ctx);
            let mut per_i = ratio_i(&p.b[..m]);
            let mut ws: Vec<Powers> = ai.iter().map(|&x| Powers::new(-x / qb)).collect();
            let mut term = |l: &[usize]| {
                let n: usize = l.iter().sum();
                let mut t = zs.get(n) * vandermonde_ratio(&ai, l, ctx) * global.get(n);
                for i in 0..m {
                    t *= per_i[i].get(l[i]) * ws[i].get(l[i]) * q_binom2(l[i], ctx);
                }
                t
            };
            sum_shells(&mut term, m, ctx)?
        }
        _ => return Err(QError::Index(format!("degenerate solution family must be 1, 2 or 3, got {k}"))),
    };
    converged(r, "degene_solution")
}

/// Solution family k of the degenerate system, prefactor included.
pub fn degene_solution(k: usize, p: &DegeneParams, ctx: &QContext) -> QResult<SeriesResult> {
    let s = degene_family_sum(k, p, ctx)?;
    Ok(SeriesResult { value: prefactor(k, p, ctx) * s.value, ..s })
}

/// The termwise a_{M+3} → ∞ limit of the W^{M,2} series of the normalized W
/// with b_{M+3} = q^λ a_{M+3}; takes a_1..a_{M+2}, b_1..b_{M+2}.
pub fn degene_stage_sum(a: &[C64], b: &[C64], qlambda: C64, ctx: &QContext) -> QResult<SeriesResult> {
    if a.len() < 3 || a.len() != b.len() {
        return Err(QError::Domain("stage series needs M+2 ≥ 3 a's and as many b's".into()));
    }
    let m = a.len() - 2;
    let q = ctx.q;
    let (a1, a2) = (a[m], a[m + 1]);
    let ai: Vec<C64> = a[..m].to_vec();
    let mut zs = Powers::new(-q * a1 / a2);
    let mut global = PochRatio::new(vec![qlambda * q], b.iter().map(|&bj| qlambda * q * q * bj / a2).collect(), ctx);
    let mut lead: Vec<PochRatio> = ai.iter().map(|&x| PochRatio::new(vec![qlambda * q * x / a2], vec![], ctx)).collect();
    let mut per_i: Vec<PochRatio> = ai
        .iter()
        .map(|&x| {
            let mut den: Vec<C64> = ai.iter().map(|&aj| q * x / aj).collect();
            den.push(q * x / a2);
            PochRatio::new(b.iter().map(|&bj| x / bj).collect(), den, ctx)
        })
        .collect();
    let mut term = |l: &[usize]| {
        let n: usize = l.iter().sum();
        let mut t = zs.get(n) * q_binom2(n, ctx) * vandermonde_ratio(&ai, l, ctx) * global.get(n);
        for i in 0..m {
            let w = qlambda * q * ai[i] / a2;
            t *= (ONE - w * ctx.qn((n + l[i]) as i64)) / (ONE - w) * lead[i].get(n) * per_i[i].get(l[i]);
        }
        t
    };
    converged(sum_shells(&mut term, m, ctx)?, "degenerate stage series")
}
