//! Limit cases: the residue of the bilateral series at z = 1 and the staged
//! a_{M+3} → ∞, a_{M+2} → 0 degenerations.

use super::cases::{cross_ratios, gaps_ok, prod, ratios, val};
use super::limits::{geometric_limit, neville_at_zero};
use super::system_cases::{deg_of, draw_lambda};
use super::{rel, Draw, Outcome, Sample};
use crate::error::QResult;
use crate::jackson::{degene_integral, jackson_0_to, psi_ratio, BalancedParams};
use crate::qcore::{pinf, theta, QContext, C64};
use crate::series::{bilateral_psi, degene_family_sum, degene_stage_sum, kajihara_w, w_series_params, DegeneParams};

/// Minimum empirical convergence rate of the staged limits.
pub const MIN_RATE: f64 = 0.9;

pub(super) fn psi_sample(d: &mut Draw, m: usize, _ctx: &QContext) -> Sample {
    let mut s = Sample::default();
    s.set_vec("c", &d.rcs(m + 1, 0.5, 1.5));
    s.set_vec("d", &d.rcs(m + 1, 0.2, 0.8));
    s
}

pub(super) fn psi_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let (c, d) = (s.vec("c", m + 1), s.vec("d", m + 1));
    (prod(&d) / prod(&c)).norm() < 0.5 && gaps_ok(&c, ctx) && gaps_ok(&d, ctx)
}

/// δ·ψ(1 − δ) at δ = 0.2·2^{-k}, extrapolated to δ = 0.
pub(super) fn psi_limit(s: &Sample, m: usize, ctx: &QContext) -> QResult<Outcome> {
    let (c, d) = (s.vec("c", m + 1), s.vec("d", m + 1));
    let wide = ctx.with_shell_cap(ctx.series_shell_cap.max(10_000));
    let h: Vec<f64> = (0..6).map(|k| 0.2 * 0.5f64.powi(k)).collect();
    let v = h
        .iter()
        .map(|&dl| Ok(dl * val(bilateral_psi(&c, &d, C64::new(1.0 - dl, 0.0), &wide))?))
        .collect::<QResult<Vec<C64>>>()?;
    let limit = neville_at_zero(&h, &v)?;
    let expect = pinf(&c, ctx) / pinf(&d, ctx);
    Ok(Outcome { lhs: Some(limit), rhs: Some(expect), rel_error: rel(limit, expect), note: None })
}

// Staged limits start from a degenerate point with M+1 pairs plus a free
// a_{M+2}; b_{M+2} = q^β a_{M+2} keeps the extended point balanced.

pub(super) fn stage_sample(d: &mut Draw, m: usize, _ctx: &QContext) -> Sample {
    let mut s = Sample::default();
    s.set_vec("a", &d.rcs(m + 1, 0.3, 0.9));
    s.set_vec("b", &d.rcs(m + 1, 0.3, 0.9));
    s.set("lambda", draw_lambda(d));
    s.set("e", d.rc(0.3, 0.9));
    s
}

fn extended(p: &DegeneParams, e: C64, ctx: &QContext) -> QResult<DegeneParams> {
    let mut a = p.a.clone();
    a.push(e);
    let mut b = p.b.clone();
    b.push(p.q_beta(ctx) * e);
    DegeneParams::new(a, b, p.lambda, ctx)
}

pub(super) fn stage_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let (Ok(p), e) = (deg_of(s, m, ctx), s.get("e")) else { return false };
    let Ok(x) = extended(&p, e, ctx) else { return false };
    let q = ctx.q;
    let ql = p.qlambda;
    let mut rs = cross_ratios(&x.a);
    rs.extend(ratios(&x.a, &x.b));
    rs.extend(x.a.iter().chain(&x.b).map(|&v| ql * v / e));
    rs.extend(x.a.iter().map(|&aj| q / (ql * aj)));
    rs.extend(p.a.iter().chain(&p.b).map(|&v| ql * v / p.a[m]));
    rs.extend([ql, p.q_beta(ctx)]);
    let qb = p.q_beta(ctx).norm();
    // The first stage converges more slowly as |q^λ| approaches 1.
    let exponent = ql.norm().ln() / q.norm().ln();
    exponent >= 0.5 && (0.05..20.0).contains(&qb) && gaps_ok(&rs, ctx)
}

/// The n values of the staged sequences: parameters of size |q|^{-n} up to
/// about 10⁵.
fn stage_ns(ctx: &QContext) -> Vec<i64> {
    let hi = (1e5f64.ln() / -ctx.q.norm().ln()).floor() as i64;
    (hi - 4..=hi).collect()
}

/// Extrapolated relative error of a sequence against its target, or 1.0
/// when the empirical rate is too slow.
fn stage_error(v: &[C64], target: C64, ctx: &QContext, what: &str, worst: &mut (f64, String)) -> QResult<()> {
    let ex = geometric_limit(v, ctx.q.norm())?;
    let (e, note) = if ex.rate < MIN_RATE {
        (1.0, format!("{what}: rate {:.3} below {MIN_RATE}", ex.rate))
    } else {
        (rel(ex.value, target), format!("{what}: rate {:.3}", ex.rate))
    };
    if e > worst.0 {
        *worst = (e, note);
    }
    Ok(())
}

fn stage_outcome(worst: (f64, String)) -> Outcome {
    Outcome { lhs: None, rhs: None, rel_error: worst.0, note: Some(worst.1) }
}

/// Stage one: C_0·∫_0^{q/a_j} ψ with a_{M+3} = q^{-n}/q^λ, b_{M+3} = q^{-n}
/// tends to the degenerate integral of the extended point. Stage two: the
/// degenerate integral with a_{M+2} = q^n tends to that of the base point.
pub(super) fn integral_limit(s: &Sample, m: usize, ctx: &QContext) -> QResult<Outcome> {
    let q = ctx.q;
    let p = deg_of(s, m, ctx)?;
    let x = extended(&p, s.get("e"), ctx)?;
    let ql = p.qlambda;
    let ns = stage_ns(ctx);
    let mut worst = (f64::NEG_INFINITY, String::new());
    for j in 1..=m + 1 {
        let tau = q / x.a[j - 1];
        let c0 = x.tau_powers[j - 1] * theta(tau, ctx)? / theta(tau / ql, ctx)?;
        let mut v1 = Vec::new();
        let mut v2 = Vec::new();
        for &n in &ns {
            let mut a = x.a.clone();
            a.push(ctx.qn(-n) / ql);
            let mut b = x.b.clone();
            b.push(ctx.qn(-n));
            let bp = BalancedParams { a, b };
            let f = |t: C64| psi_ratio(&bp.a, &bp.b, t, ctx);
            v1.push(c0 * ql.powi(n as i32) * jackson_0_to(tau, &f, ctx)?);
            v2.push(degene_integral(j, &extended(&p, ctx.qn(n), ctx)?, ctx)?);
        }
        stage_error(&v1, degene_integral(j, &x, ctx)?, ctx, &format!("a_(M+3) → ∞, j={j}"), &mut worst)?;
        stage_error(&v2, degene_integral(j, &p, ctx)?, ctx, &format!("a_(M+2) → 0, j={j}"), &mut worst)?;
    }
    Ok(stage_outcome(worst))
}

/// Stage one: the W^{M,2} series of the normalized W with
/// a_{M+3} = q^{-n}/q^λ, b_{M+3} = q^{-n} tends to the stage series. Stage
/// two: the stage series with a_{M+1} = q^n (old a_{M+1} moved to the
/// a_{M+2} slot) tends to the first degenerate family.
pub(super) fn series_limit(s: &Sample, m: usize, ctx: &QContext) -> QResult<Outcome> {
    let q = ctx.q;
    let p = deg_of(s, m, ctx)?;
    let x = extended(&p, s.get("e"), ctx)?;
    let ql = p.qlambda;
    let qb = p.q_beta(ctx);
    let ns = stage_ns(ctx);
    let mut v1 = Vec::new();
    let mut v2 = Vec::new();
    for &n in &ns {
        let mut a = x.a.clone();
        a.push(ctx.qn(-n) / ql);
        let mut b = x.b.clone();
        b.push(ctx.qn(-n));
        let bp = BalancedParams { a, b };
        v1.push(val(kajihara_w(&w_series_params(&bp, q), ctx))?);
        let eps = ctx.qn(n);
        let mut a2 = p.a[..m].to_vec();
        a2.extend([eps, p.a[m]]);
        let mut b2 = p.b.clone();
        b2.push(qb * eps);
        v2.push(val(degene_stage_sum(&a2, &b2, ql, ctx))?);
    }
    let mut worst = (f64::NEG_INFINITY, String::new());
    stage_error(&v1, val(degene_stage_sum(&x.a, &x.b, ql, ctx))?, ctx, "a_(M+3) → ∞", &mut worst)?;
    stage_error(&v2, val(degene_family_sum(1, &p, ctx))?, ctx, "a_(M+2) → 0", &mut worst)?;
    Ok(stage_outcome(worst))
}
