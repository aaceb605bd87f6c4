//! Equality cases: transformation formulas between series, Jackson
//! integrals and products.

use super::cases::{balanced_ok, bp_of, conditioned, no_cancellation, cross_ratios, gaps_ok, prod, ratios, val};
use super::{Draw, Sample};
use crate::error::QResult;
use crate::jackson::{jackson_0_to, jackson_between, psi_ratio, rp_integral, rp_integrand, BalancedParams};
use crate::qcore::{pinf, q_binom2, qpoch_finite, QContext, C64, ONE};
use crate::series::{
    kajihara_w, phi_d, qal_solution, rphis, sum_shells, vandermonde_ratio, vwp_w, w_normalized, KajiharaParams, PochRatio,
    Powers, QalParams,
};

type Vals = QResult<Vec<C64>>;

fn poch(a: C64, n: i64, ctx: &QContext) -> QResult<C64> {
    qpoch_finite(a, n, ctx)
}

/// Every denominator of a W^{M,N} series kept off the lattice.
fn kaji_ok(p: &KajiharaParams, ctx: &QContext) -> bool {
    let q = ctx.q;
    let mut rs: Vec<C64> = p.x.iter().map(|&x| p.a * x).collect();
    rs.extend(cross_ratios(&p.x));
    rs.extend(p.u.iter().map(|&u| p.a * q / u));
    rs.extend(p.x.iter().flat_map(|&x| p.v.iter().map(move |&v| p.a * q * x / v)));
    gaps_ok(&rs, ctx)
}

// Bailey's integral: ∫_a^b (qt/a, qt/b, ct, dt)_∞/(et, ft, gt, ht)_∞ d_qt.

pub(super) fn bailey_sample(d: &mut Draw, _m: usize, _ctx: &QContext) -> Sample {
    let mut s = Sample::default();
    for n in ["a", "b", "c", "e", "f", "g", "h"] {
        s.set(n, d.rc(0.2, 0.9));
    }
    let dv = s.get("a") * s.get("b") * s.get("e") * s.get("f") * s.get("g") * s.get("h") / s.get("c");
    s.set("d", dv);
    s
}

pub(super) fn bailey_ok(s: &Sample, _m: usize, ctx: &QContext) -> bool {
    let g = |n: &str| s.get(n);
    let (a, b, c, d, h) = (g("a"), g("b"), g("c"), g("d"), g("h"));
    let efgh = [g("e"), g("f"), g("g"), h];
    let mut rs = vec![a / b, b * c * d / h, c * d / h, c / h, d / h];
    rs.extend(ratios(&[a, b], &efgh).iter().map(|r| ONE / r));
    (a * h).norm() < 0.8 && d.norm() < 2.0 && gaps_ok(&rs, ctx)
}

pub(super) fn bailey_lhs(s: &Sample, _m: usize, ctx: &QContext) -> Vals {
    let g = |n: &str| s.get(n);
    let q = ctx.q;
    let (a, b) = (g("a"), g("b"));
    let num = [q / a, q / b, g("c"), g("d")];
    let den = [g("e"), g("f"), g("g"), g("h")];
    let f = move |t: C64| psi_ratio(&num, &den, t, ctx);
    Ok(vec![jackson_between(a, b, &f, ctx)?])
}

pub(super) fn bailey_rhs(s: &Sample, _m: usize, ctx: &QContext) -> Vals {
    let g = |n: &str| s.get(n);
    let q = ctx.q;
    let (a, b, c, d, e, f, gg, h) = (g("a"), g("b"), g("c"), g("d"), g("e"), g("f"), g("g"), g("h"));
    let pre = b * (1.0 - q) * pinf(&[q, b * q / a, a / b, c * d / (e * h), c * d / (f * h), c * d / (gg * h), b * c, b * d], ctx)
        / pinf(&[a * e, a * f, a * gg, b * e, b * f, b * gg, b * h, b * c * d / h], ctx);
    let w = val(vwp_w(b * c * d / (h * q), &[b * e, b * f, b * gg, c / h, d / h], a * h, ctx))?;
    Ok(vec![pre * w])
}

// 8W7 as two balanced 4φ3.

fn six(s: &Sample) -> [C64; 6] {
    ["a", "b", "c", "d", "e", "f"].map(|n| s.get(n))
}

pub(super) fn two43_sample(d: &mut Draw, _m: usize, ctx: &QContext) -> Sample {
    let mut s = Sample::default();
    for n in ["a", "b", "c", "d", "e", "f"] {
        s.set(n, d.rc(0.3, 1.5));
    }
    let [a, b, c, dd, e, f] = six(&s);
    s.set("z", a * a * ctx.q * ctx.q / (b * c * dd * e * f));
    s
}

pub(super) fn two43_ok(s: &Sample, _m: usize, ctx: &QContext) -> bool {
    let [a, b, c, d, e, f] = six(s);
    let q = ctx.q;
    let z = s.get("z");
    let mut rs: Vec<C64> = [b, c, d, e, f].iter().map(|&r| a / r).collect();
    rs.extend([a, d * e * f / a, z, a * q / (b * c), d * e * f / (a * q), a * a * q * q / (b * d * e * f), a * a * q * q / (c * d * e * f)]);
    z.norm() < 0.8 && gaps_ok(&rs, ctx)
}

pub(super) fn two43_lhs(s: &Sample, _m: usize, ctx: &QContext) -> Vals {
    let [a, b, c, d, e, f] = six(s);
    Ok(vec![val(vwp_w(a, &[b, c, d, e, f], s.get("z"), ctx))?])
}

pub(super) fn two43_rhs(s: &Sample, _m: usize, ctx: &QContext) -> Vals {
    let [a, b, c, d, e, f] = six(s);
    let (q, z) = (ctx.q, s.get("z"));
    let aq = a * q;
    let r1 = pinf(&[aq, aq / (d * e), aq / (d * f), aq / (e * f)], ctx) / pinf(&[aq / d, aq / e, aq / f, aq / (d * e * f)], ctx)
        * val(rphis(&[aq / (b * c), d, e, f], &[aq / b, aq / c, d * e * f / a], q, ctx))?;
    let r2 = pinf(&[aq, aq / (b * c), d, e, f, a * aq * q / (b * d * e * f), a * aq * q / (c * d * e * f)], ctx)
        / pinf(&[aq / b, aq / c, aq / d, aq / e, aq / f, z, d * e * f / aq], ctx)
        * val(rphis(
            &[aq / (d * e), aq / (d * f), aq / (e * f), z],
            &[a * aq * q / (b * d * e * f), a * aq * q / (c * d * e * f), aq * q / (d * e * f)],
            q,
            ctx,
        ))?;
    Ok(vec![r1 + r2])
}

// Kajihara's terminating transformation.

fn kt_shape(s: &Sample) -> (usize, i64) {
    (s.int("N") as usize, s.int("n"))
}

pub(super) fn kt_sample(d: &mut Draw, m: usize, ctx: &QContext) -> Sample {
    let nn = 1 + (d.seed() % 2) as usize;
    let n = ((d.seed() / 2) % 4) as i64;
    let mut s = Sample::default();
    s.set_int("N", nn as i64);
    s.set_int("n", n);
    let x = d.rcs(m, 0.2, 0.9);
    let y = d.rcs(nn, 0.2, 0.9);
    let (a, c) = (d.rc(0.2, 0.9), d.rc(0.2, 0.9));
    let b = d.rcs(m + nn + 2, 0.2, 0.9);
    let mu = a.powi(nn as i32 + 2) * ctx.q.powi(nn as i32 + 1) * prod(&y) / (c.powi(nn as i32 + 1) * prod(&b) * prod(&x));
    s.set_vec("x", &x);
    s.set_vec("y", &y);
    s.set_vec("b", &b);
    s.set("a", a);
    s.set("c", c);
    s.set("mu", mu);
    s
}

fn kt_params(s: &Sample, m: usize, ctx: &QContext) -> (KajiharaParams, KajiharaParams) {
    let (nn, n) = kt_shape(s);
    let q = ctx.q;
    let (x, y, b) = (s.vec("x", m), s.vec("y", nn), s.vec("b", m + nn + 2));
    let (a, c, mu) = (s.get("a"), s.get("c"), s.get("mu"));
    let tail = [mu * c * ctx.qn(n), ctx.qn(-n)];
    let mut v: Vec<C64> = y.iter().map(|&yk| c / yk).collect();
    v.extend(tail);
    let left = KajiharaParams { x: x.clone(), a, u: b.clone(), v, z: q };
    let mut v2: Vec<C64> = x.iter().map(|&xi| mu * c / (a * xi)).collect();
    v2.extend(tail);
    let right = KajiharaParams { x: y, a: mu, u: b.iter().map(|&bj| a * q / (c * bj)).collect(), v: v2, z: q };
    (left, right)
}

pub(super) fn kt_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let (l, r) = kt_params(s, m, ctx);
    let mu = s.get("mu").norm();
    (0.05..20.0).contains(&mu)
        && kaji_ok(&l, ctx)
        && kaji_ok(&r, ctx)
        && gaps_ok(&r.v[..l.x.len()], ctx)
        && conditioned(kajihara_w(&l, ctx))
        && conditioned(kajihara_w(&r, ctx))
}

pub(super) fn kt_lhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    Ok(vec![val(kajihara_w(&kt_params(s, m, ctx).0, ctx))?])
}

pub(super) fn kt_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let (nn, n) = kt_shape(s);
    let q = ctx.q;
    let (x, y, b) = (s.vec("x", m), s.vec("y", nn), s.vec("b", m + nn + 2));
    let (a, c, mu) = (s.get("a"), s.get("c"), s.get("mu"));
    let mut pre = ONE;
    for &xi in &x {
        pre *= poch(a * q * xi, n, ctx)? / poch(mu * c / (a * xi), n, ctx)?;
    }
    for &bj in &b {
        pre *= poch(mu * c * bj / a, n, ctx)? / poch(a * q / bj, n, ctx)?;
    }
    for &yk in &y {
        pre *= poch(c / yk, n, ctx)? / poch(mu * q * yk, n, ctx)?;
    }
    Ok(vec![pre * val(kajihara_w(&kt_params(s, m, ctx).1, ctx))?])
}

// Terminating W^{M,3} as a single very-well-poised series.

pub(super) fn wm3_sample(d: &mut Draw, m: usize, ctx: &QContext) -> Sample {
    let mut s = Sample::default();
    s.set_int("k", 1 + (d.seed() % 3) as i64);
    let x = d.rcs(m, 0.2, 0.9);
    let (a, c) = (d.rc(0.2, 0.9), d.rc(0.2, 0.9));
    let b = d.rcs(m + 3, 0.2, 0.9);
    let q = ctx.q;
    s.set("mu", a.powi(3) * q * q / (c * c * prod(&b) * prod(&x)));
    s.set_vec("x", &x);
    s.set_vec("b", &b);
    s.set("a", a);
    s.set("c", c);
    s
}

fn wm3_left(s: &Sample, m: usize, ctx: &QContext) -> KajiharaParams {
    let k = s.int("k");
    let (a, c, mu) = (s.get("a"), s.get("c"), s.get("mu"));
    KajiharaParams { x: s.vec("x", m), a, u: s.vec("b", m + 3), v: vec![c, mu * c * ctx.qn(k), ctx.qn(-k)], z: ctx.q }
}

fn wm3_rest(s: &Sample, m: usize, ctx: &QContext) -> Vec<C64> {
    let k = s.int("k");
    let (a, c, mu) = (s.get("a"), s.get("c"), s.get("mu"));
    let mut rest: Vec<C64> = s.vec("x", m).iter().map(|&xi| mu * c / (a * xi)).collect();
    rest.extend(s.vec("b", m + 3).iter().map(|&bj| a * ctx.q / (c * bj)));
    rest.extend([mu * c * ctx.qn(k), ctx.qn(-k)]);
    rest
}

pub(super) fn wm3_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let mu = s.get("mu");
    let rest: Vec<C64> = wm3_rest(s, m, ctx).iter().map(|&r| ctx.q * mu / r).collect();
    (0.05..20.0).contains(&mu.norm()) && kaji_ok(&wm3_left(s, m, ctx), ctx) && gaps_ok(&rest, ctx) && gaps_ok(&[mu], ctx)
}

pub(super) fn wm3_lhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    Ok(vec![val(kajihara_w(&wm3_left(s, m, ctx), ctx))?])
}

pub(super) fn wm3_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let k = s.int("k");
    let q = ctx.q;
    let (a, c, mu) = (s.get("a"), s.get("c"), s.get("mu"));
    let mut pre = poch(c, k, ctx)? / poch(mu * q, k, ctx)?;
    for &xi in &s.vec("x", m) {
        pre *= poch(a * q * xi, k, ctx)? / poch(mu * c / (a * xi), k, ctx)?;
    }
    for &bj in &s.vec("b", m + 3) {
        pre *= poch(mu * c * bj / a, k, ctx)? / poch(a * q / bj, k, ctx)?;
    }
    Ok(vec![pre * val(vwp_w(mu, &wm3_rest(s, m, ctx), q, ctx))?])
}

// W^{M,2}(x; a; b_1..b_{M+2}; c1, c2; d) with d = a²q²/(c1c2∏b∏x).

struct W2 {
    x: Vec<C64>,
    a: C64,
    b: Vec<C64>,
    c1: C64,
    c2: C64,
    d: C64,
}

fn w2(s: &Sample, m: usize) -> W2 {
    W2 { x: s.vec("x", m), a: s.get("a"), b: s.vec("b", m + 2), c1: s.get("c1"), c2: s.get("c2"), d: s.get("d") }
}

fn w2_sample(d: &mut Draw, m: usize, ctx: &QContext, b_range: (f64, f64), c_range: (f64, f64)) -> Sample {
    let mut s = Sample::default();
    let x = d.rcs(m, 0.2, 0.9);
    let a = d.rc(0.2, 0.9);
    let b = d.rcs(m + 2, b_range.0, b_range.1);
    let (c1, c2) = (d.rc(c_range.0, c_range.1), d.rc(c_range.0, c_range.1));
    let q = ctx.q;
    s.set_vec("x", &x);
    s.set_vec("b", &b);
    s.set("a", a);
    s.set("c1", c1);
    s.set("c2", c2);
    s.set("d", a * a * q * q / (c1 * c2 * prod(&b) * prod(&x)));
    s
}

fn w2_params(w: &W2) -> KajiharaParams {
    KajiharaParams { x: w.x.clone(), a: w.a, u: w.b.clone(), v: vec![w.c1, w.c2], z: w.d }
}

fn w2_ok(w: &W2, ctx: &QContext) -> bool {
    let q = ctx.q;
    let mut rs = vec![w.d, w.c1 / w.c2, w.c1 * w.d, w.c2 * w.d];
    rs.extend(w.x.iter().flat_map(|&xi| [w.a * q * xi / w.c1, w.a * q * xi / w.c2]));
    w.d.norm() < 0.6 && kaji_ok(&w2_params(w), ctx) && gaps_ok(&rs, ctx)
}

pub(super) fn thm31_sample(d: &mut Draw, m: usize, ctx: &QContext) -> Sample {
    w2_sample(d, m, ctx, (0.5, 1.5), (0.5, 1.5))
}

pub(super) fn thm31_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let w = w2(s, m);
    w2_ok(&w, ctx) && balanced_gaps(&w2_balanced(&w, ctx), ctx)
}

fn balanced_gaps(bp: &BalancedParams, ctx: &QContext) -> bool {
    gaps_ok(&cross_ratios(&bp.a), ctx) && gaps_ok(&ratios(&bp.a, &bp.b), ctx)
}

pub(super) fn w2_lhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    Ok(vec![val(kajihara_w(&w2_params(&w2(s, m)), ctx))?])
}

pub(super) fn thm31_series_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let w = w2(s, m);
    let q = ctx.q;
    let (a, d) = (w.a, w.d);
    let term = |c1: C64, c2: C64| -> QResult<C64> {
        let mut p = pinf(&[c1 * d, c2], ctx) / pinf(&[d, c2 / c1], ctx);
        for &xi in &w.x {
            p *= pinf(&[a * q * xi], ctx) / pinf(&[a * q * xi / c1], ctx);
        }
        for &bj in &w.b {
            p *= pinf(&[a * q / (c1 * bj)], ctx) / pinf(&[a * q / bj], ctx);
        }
        let mut up = vec![c1];
        up.extend(w.b.iter().map(|&bj| a * q / (c2 * bj)));
        let mut lo = vec![q * c1 / c2, c1 * d];
        lo.extend(w.x.iter().map(|&xi| a * q * xi / c2));
        Ok(p * val(rphis(&up, &lo, q, ctx))?)
    };
    Ok(vec![term(w.c1, w.c2)? + term(w.c2, w.c1)?])
}

/// The balanced point whose φ_{M+2,M+3} represents W^{M,2}:
/// a = (x, c1c2d/(aq), c2/a, c1/a), b = (1/b_j, c1c2/(aq)).
fn w2_balanced(w: &W2, ctx: &QContext) -> BalancedParams {
    let q = ctx.q;
    let mut a = w.x.clone();
    a.extend([w.c1 * w.c2 * w.d / (w.a * q), w.c2 / w.a, w.c1 / w.a]);
    let mut b: Vec<C64> = w.b.iter().map(|&bj| ONE / bj).collect();
    b.push(w.c1 * w.c2 / (w.a * q));
    BalancedParams { a, b }
}

/// The product relating φ_{M+2,M+3} to the W^{M,2} series of a balanced
/// point, written out from the balanced parameters.
fn integral_prefactor(bp: &BalancedParams, ctx: &QContext) -> C64 {
    let m = bp.m();
    let q = ctx.q;
    let (ap, ar, as_, b3) = (bp.a[m], bp.a[m + 1], bp.a[m + 2], bp.b[m + 2]);
    let mut p = ONE;
    for &xi in &bp.a[..m] {
        p *= pinf(&[q * xi / ar, q * xi / as_], ctx) / pinf(&[q * q * xi * b3 / (ar * as_)], ctx);
    }
    for &bj in &bp.b[..m + 2] {
        p *= pinf(&[q * q * bj * b3 / (ar * as_)], ctx);
    }
    for &bj in &bp.b {
        p /= pinf(&[q * bj / ar, q * bj / as_], ctx);
    }
    p * pinf(&[q, ap / b3, ar / as_, as_ / ar], ctx) * (1.0 - q) * q / (as_ - ar)
}

pub(super) fn thm31_integral_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let bp = w2_balanced(&w2(s, m), ctx);
    Ok(vec![rp_integral(&bp, m + 2, m + 3, ctx)? / integral_prefactor(&bp, ctx)])
}

pub(super) fn sym_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let w = w2(s, m);
    let q = ctx.q;
    let za = w.a * q * w.x[0] / (w.c1 * w.c2);
    let zb = w.c1 * w.c2 * w.b[0] * w.d / (w.a * q);
    za.norm() < 0.6 && zb.norm() < 0.6 && w2_ok(&w, ctx) && gaps_ok(&[za, zb, w.c1 * w.c2 * w.d], ctx)
}

pub(super) fn sym_a_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let w = w2(s, m);
    let q = ctx.q;
    let (a, c1, c2, d) = (w.a, w.c1, w.c2, w.d);
    let ax = a * q * w.x[0];
    let pre = pinf(&[c1 * d, c2 * d, ax, ax / (c1 * c2)], ctx) / pinf(&[d, c1 * c2 * d, ax / c1, ax / c2], ctx);
    let mut x = w.x.clone();
    x[0] = c1 * c2 * d / (a * q);
    let p = KajiharaParams { x, a, u: w.b.clone(), v: vec![c1, c2], z: ax / (c1 * c2) };
    Ok(vec![pre * val(kajihara_w(&p, ctx))?])
}

pub(super) fn sym_b_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let w = w2(s, m);
    let q = ctx.q;
    let (a, c1, c2, d, b1) = (w.a, w.c1, w.c2, w.d, w.b[0]);
    let z = c1 * c2 * b1 * d / (a * q);
    let mut pre = pinf(&[z], ctx) / pinf(&[d], ctx);
    for &xi in &w.x {
        pre *= pinf(&[a * q * xi], ctx) / pinf(&[a * a * q * q * xi / (c1 * c2 * b1)], ctx);
    }
    for &bj in &w.b[1..] {
        pre *= pinf(&[a * a * q * q / (c1 * c2 * b1 * bj)], ctx) / pinf(&[a * q / bj], ctx);
    }
    let mut u = vec![a * q / (c1 * c2)];
    u.extend_from_slice(&w.b[1..]);
    let p = KajiharaParams { x: w.x.clone(), a: a * a * q / (c1 * c2 * b1), u, v: vec![a * q / (c1 * b1), a * q / (c2 * b1)], z };
    Ok(vec![pre * val(kajihara_w(&p, ctx))?])
}

pub(super) fn threeterm_sample(d: &mut Draw, m: usize, ctx: &QContext) -> Sample {
    w2_sample(d, m, ctx, (0.3, 1.5), (0.9, 2.0))
}

pub(super) fn threeterm_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let w = w2(s, m);
    let q = ctx.q;
    let mut rs = vec![w.c1, w.c2, q / w.d, w.c1 * w.d, w.c2 * w.d];
    for c in [w.c1, w.c2] {
        let p = KajiharaParams { x: w.x.clone(), a: w.a * q / (c * w.d), u: w.b.clone(), v: vec![c, q / w.d], z: q / c };
        if !kaji_ok(&p, ctx) {
            return false;
        }
        rs.extend(w.x.iter().map(|&xi| w.a * q * q * xi / (c * w.d)));
        rs.extend(w.b.iter().map(|&bj| w.a * q * q / (w.c1 * w.c2 * w.d * bj)));
    }
    if !((q / w.c1).norm() < 0.6 && (q / w.c2).norm() < 0.6 && w2_ok(&w, ctx) && gaps_ok(&rs, ctx)) {
        return false;
    }
    // The two terms can be large and nearly opposite.
    matches!(threeterm_terms(&w, ctx), Ok((t1, t2)) if no_cancellation(&[t1, t2]))
}

/// The two terms of the three-term relation, c1 ↔ c2 swapped.
fn threeterm_terms(w: &W2, ctx: &QContext) -> QResult<(C64, C64)> {
    let q = ctx.q;
    let (a, d) = (w.a, w.d);
    let term = |c1: C64, c2: C64| -> QResult<C64> {
        let mut p = pinf(&[c1, q / c1, c2 * d, q / (c2 * d)], ctx) / pinf(&[d, q / d, c1 / c2, q * c2 / c1], ctx);
        for &xi in &w.x {
            p *= pinf(&[a * q * xi, a * q * q * xi / (c1 * c2 * d)], ctx) / pinf(&[a * q * xi / c2, a * q * q * xi / (c1 * d)], ctx);
        }
        for &bj in &w.b {
            p *= pinf(&[a * q / (c2 * bj), a * q * q / (c1 * d * bj)], ctx)
                / pinf(&[a * q / bj, a * q * q / (c1 * c2 * d * bj)], ctx);
        }
        let k = KajiharaParams { x: w.x.clone(), a: a * q / (c1 * d), u: w.b.clone(), v: vec![c2, q / d], z: q / c1 };
        Ok(p * val(kajihara_w(&k, ctx))?)
    };
    Ok((term(w.c1, w.c2)?, term(w.c2, w.c1)?))
}

pub(super) fn threeterm_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let (t1, t2) = threeterm_terms(&w2(s, m), ctx)?;
    Ok(vec![t1 + t2])
}

// 8W7 → 8W7 with λ = qa²/(bcd).

pub(super) fn w87_sample(d: &mut Draw, _m: usize, ctx: &QContext) -> Sample {
    let mut s = two43_sample(d, 1, ctx);
    let [a, b, c, dd, _, _] = six(&s);
    s.set("lambda", ctx.q * a * a / (b * c * dd));
    s
}

pub(super) fn w87_ok(s: &Sample, _m: usize, ctx: &QContext) -> bool {
    let [a, b, c, d, e, f] = six(s);
    let (q, l, z) = (ctx.q, s.get("lambda"), s.get("z"));
    let mut rs: Vec<C64> = [b, c, d, e, f].iter().map(|&r| a / r).collect();
    rs.extend([a, l, l * q / e, l * q / f, a / b, a / c, a / d, l * q / (e * f)]);
    z.norm() < 0.7 && (a * q / (e * f)).norm() < 0.7 && l.norm() < 20.0 && gaps_ok(&rs, ctx)
}

pub(super) fn w87_lhs(s: &Sample, _m: usize, ctx: &QContext) -> Vals {
    let [a, b, c, d, e, f] = six(s);
    Ok(vec![val(vwp_w(a, &[b, c, d, e, f], s.get("z"), ctx))?])
}

pub(super) fn w87_rhs(s: &Sample, _m: usize, ctx: &QContext) -> Vals {
    let [a, b, c, d, e, f] = six(s);
    let (q, l) = (ctx.q, s.get("lambda"));
    let pre = pinf(&[a * q, a * q / (e * f), l * q / e, l * q / f], ctx) / pinf(&[a * q / e, a * q / f, l * q, l * q / (e * f)], ctx);
    Ok(vec![pre * val(vwp_w(l, &[l * b / a, l * c / a, l * d / a, e, f], a * q / (e * f), ctx))?])
}

// The normalized W of a balanced point.

pub(super) fn wsym_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let (a, b) = (s.vec("a", m + 3), s.vec("b", m + 3));
    if !(balanced_ok(s, m, ctx, 0.6) && (a[0] / b[m + 2]).norm() < 0.6 && (a[m] / b[0]).norm() < 0.6) {
        return false;
    }
    let mut pa = bp_of(s, m);
    pa.a.swap(0, m);
    let mut pb = bp_of(s, m);
    pb.b.swap(0, m + 2);
    [bp_of(s, m), pa, pb].iter().all(|p| conditioned(w_normalized(p, ctx)))
}

pub(super) fn wsym_lhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let w = val(w_normalized(&bp_of(s, m), ctx))?;
    Ok(vec![w, w])
}

pub(super) fn wsym_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let mut pa = bp_of(s, m);
    pa.a.swap(0, m);
    let mut pb = bp_of(s, m);
    pb.b.swap(0, m + 2);
    Ok(vec![val(w_normalized(&pa, ctx))?, val(w_normalized(&pb, ctx))?])
}

pub(super) fn wint_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    if !balanced_ok(s, m, ctx, 0.6) {
        return false;
    }
    let bp = bp_of(s, m);
    let psi = rp_integrand(&bp, ctx);
    let ends = [m + 2, m + 1].map(|k| jackson_0_to(ctx.q / bp.a[k], &psi, ctx));
    let separated = matches!(ends, [Ok(hi), Ok(lo)] if no_cancellation(&[hi, -lo]));
    separated && conditioned(w_normalized(&bp, ctx))
}

pub(super) fn wint_lhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    Ok(vec![val(w_normalized(&bp_of(s, m), ctx))?])
}

pub(super) fn wint_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let q = ctx.q;
    let i = rp_integral(&bp_of(s, m), m + 2, m + 3, ctx)?;
    Ok(vec![i / (q * (1.0 - q) * pinf(&[q], ctx))])
}

// q-Appell–Lauricella transformations.

pub(super) fn qal_of(s: &Sample, m: usize) -> QalParams {
    QalParams { a: s.get("A"), b: s.vec("B", m), c: s.get("C"), x: s.vec("x", m) }
}

pub(super) fn qal_gaps(p: &QalParams, ctx: &QContext) -> bool {
    let y: Vec<C64> = p.b.iter().zip(&p.x).map(|(&b, &x)| b * x).collect();
    let mut rs = vec![p.a, p.c, p.c / p.a];
    rs.extend(p.b.iter().copied());
    rs.extend(cross_ratios(&y));
    rs.extend(cross_ratios(&p.x));
    rs.extend(ratios(&y, &p.x));
    rs.extend(y.iter().flat_map(|&yi| [yi, p.a * yi, p.a * yi / p.c, p.a * yi / ctx.q]));
    rs.extend(p.x.iter().map(|&xi| p.a * xi));
    gaps_ok(&rs, ctx)
}

pub(super) fn qalt_sample(d: &mut Draw, m: usize, _ctx: &QContext) -> Sample {
    let mut s = Sample::default();
    s.set("A", d.rc(0.2, 0.7));
    s.set("C", d.rc(0.2, 0.9));
    s.set_vec("B", &d.rcs(m, 0.3, 1.5));
    s.set_vec("x", &d.rcs(m, 0.1, 0.5));
    s
}

pub(super) fn qalt_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let p = qal_of(s, m);
    (p.c / prod(&p.b)).norm() < 0.8 && qal_gaps(&p, ctx)
}

pub(super) fn qalt_lhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let v = val(phi_d(&qal_of(s, m), ctx))?;
    Ok(vec![v; 3])
}

pub(super) fn qalt_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let p = qal_of(s, m);
    let cb = p.c / prod(&p.b);
    let f2 = val(qal_solution(2, &p, ctx))? * pinf(&[cb], ctx) / pinf(&[p.c], ctx);
    Ok(vec![val(qal_solution(1, &p, ctx))?, f2, val(qal_solution(3, &p, ctx))?])
}

pub(super) fn andrews_lhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    Ok(vec![val(phi_d(&qal_of(s, m), ctx))?])
}

pub(super) fn andrews_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let p = qal_of(s, m);
    let y: Vec<C64> = p.b.iter().zip(&p.x).map(|(&b, &x)| b * x).collect();
    let mut pre = pinf(&[p.a], ctx) / pinf(&[p.c], ctx);
    for i in 0..m {
        pre *= pinf(&[y[i]], ctx) / pinf(&[p.x[i]], ctx);
    }
    let mut up = vec![p.c / p.a];
    up.extend_from_slice(&p.x);
    Ok(vec![pre * val(rphis(&up, &y, p.a, ctx))?])
}

// A Kajihara-type multiple series as φ_D.

pub(super) fn remk_sample(d: &mut Draw, m: usize, _ctx: &QContext) -> Sample {
    let mut s = Sample::default();
    s.set_vec("a", &d.rcs(m, 0.3, 0.9));
    s.set_vec("x", &d.rcs(m, 0.3, 0.9));
    s.set("c", d.rc(0.2, 0.5));
    s.set("b", d.rc(0.3, 0.9));
    s.set("u", d.rc(0.1, 0.5));
    s
}

fn remk_args(s: &Sample, m: usize) -> Vec<C64> {
    let (a, x, c) = (s.vec("a", m), s.vec("x", m), s.get("c"));
    (0..m).map(|i| c * x[i] / (a[i] * x[m - 1])).collect()
}

pub(super) fn remk_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let (a, x, c, b, u) = (s.vec("a", m), s.vec("x", m), s.get("c"), s.get("b"), s.get("u"));
    let args = remk_args(s, m);
    let xm = x[m - 1];
    let mut rs: Vec<C64> = cross_ratios(&x);
    rs.extend(x.iter().map(|&xi| c * xi / xm));
    rs.extend(args.iter().copied());
    rs.extend([prod(&a) * u, b, c]);
    args.iter().all(|z| z.norm() < 0.8) && gaps_ok(&rs, ctx)
}

pub(super) fn remk_lhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let q = ctx.q;
    let (a, x, c, b, u) = (s.vec("a", m), s.vec("x", m), s.get("c"), s.get("b"), s.get("u"));
    let xm = x[m - 1];
    let pa = prod(&a);
    let mut pre = pinf(&[u], ctx) / pinf(&[pa * u], ctx);
    for i in 0..m {
        pre *= pinf(&[c * x[i] / xm], ctx) / pinf(&[c / a[i] * x[i] / xm], ctx);
    }
    let mut per_i: Vec<PochRatio> = (0..m)
        .map(|i| {
            let mut num: Vec<C64> = (0..m).map(|j| a[j] * x[i] / x[j]).collect();
            num.push(b * x[i] / xm);
            let mut den: Vec<C64> = (0..m).map(|j| q * x[i] / x[j]).collect();
            den.push(c * x[i] / xm);
            PochRatio::new(num, den, ctx)
        })
        .collect();
    let mut us = Powers::new(u);
    let xv = x.clone();
    let mut term = |l: &[usize]| {
        let mut t = us.get(l.iter().sum()) * vandermonde_ratio(&xv, l, ctx);
        for i in 0..m {
            t *= per_i[i].get(l[i]);
        }
        t
    };
    let r = crate::series::converged(sum_shells(&mut term, m, ctx)?, "Kajihara-type multiple series")?;
    Ok(vec![pre * r.value])
}

pub(super) fn remk_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let (a, c, b, u) = (s.vec("a", m), s.get("c"), s.get("b"), s.get("u"));
    let pa = prod(&a);
    let p = QalParams { a: pa * b * u / c, b: a, c: pa * u, x: remk_args(s, m) };
    Ok(vec![val(phi_d(&p, ctx))?])
}

// M+1φM as a multiple series.

pub(super) fn gen_sample(d: &mut Draw, m: usize, _ctx: &QContext) -> Sample {
    let mut s = Sample::default();
    s.set_vec("a", &d.rcs(m + 1, 0.3, 0.9));
    s.set_vec("b", &d.rcs(m, 0.3, 0.9));
    s.set("x", d.rc(0.1, 0.5));
    s
}

pub(super) fn gen_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let (a, b, x) = (s.vec("a", m + 1), s.vec("b", m), s.get("x"));
    let z = prod(&a) * x / prod(&b);
    let mut rs = cross_ratios(&b);
    rs.extend(ratios(&b, &a));
    rs.extend(b.iter().copied());
    rs.extend([x, a[m] * x, z]);
    z.norm() < 0.9 && gaps_ok(&rs, ctx)
}

pub(super) fn gen_lhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    Ok(vec![val(rphis(&s.vec("a", m + 1), &s.vec("b", m), s.get("x"), ctx))?])
}

pub(super) fn gen_euler_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let q = ctx.q;
    let (a, b, x) = (s.vec("a", m + 1), s.vec("b", m), s.get("x"));
    let z = prod(&a) * x / prod(&b);
    let mut per_i: Vec<PochRatio> = (0..m)
        .map(|i| {
            let num = a.iter().map(|&aj| b[i] / aj).collect();
            let mut den: Vec<C64> = b.iter().map(|&bj| q * b[i] / bj).collect();
            den.push(b[i]);
            PochRatio::new(num, den, ctx)
        })
        .collect();
    let mut zs = Powers::new(z);
    let bv = b.clone();
    let mut term = |l: &[usize]| {
        let mut t = zs.get(l.iter().sum()) * vandermonde_ratio(&bv, l, ctx);
        for i in 0..m {
            t *= per_i[i].get(l[i]);
        }
        t
    };
    let r = crate::series::converged(sum_shells(&mut term, m, ctx)?, "q-Euler type multiple series")?;
    Ok(vec![pinf(&[z], ctx) / pinf(&[x], ctx) * r.value])
}

pub(super) fn gen_jackson_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let q = ctx.q;
    let (a, b, x) = (s.vec("a", m + 1), s.vec("b", m), s.get("x"));
    let am = a[m];
    let z = -prod(&a) * x / (am * prod(&b));
    let mut global = PochRatio::new(vec![am], vec![am * x], ctx);
    let mut per_i: Vec<PochRatio> = (0..m)
        .map(|i| {
            let num = a[..m].iter().map(|&aj| b[i] / aj).collect();
            let mut den: Vec<C64> = b.iter().map(|&bj| q * b[i] / bj).collect();
            den.push(b[i]);
            PochRatio::new(num, den, ctx)
        })
        .collect();
    let mut zs = Powers::new(z);
    let mut bs: Vec<Powers> = b.iter().map(|&bi| Powers::new(bi)).collect();
    let bv = b.clone();
    let mut term = |l: &[usize]| {
        let n: usize = l.iter().sum();
        let mut t = zs.get(n) * vandermonde_ratio(&bv, l, ctx) * global.get(n);
        for i in 0..m {
            t *= per_i[i].get(l[i]) * bs[i].get(l[i]) * q_binom2(l[i], ctx);
        }
        t
    };
    let r = crate::series::converged(sum_shells(&mut term, m, ctx)?, "Jackson type multiple series")?;
    Ok(vec![pinf(&[am * x], ctx) / pinf(&[x], ctx) * r.value])
}

// The M = 1 reductions: second Heine, Jackson and q-Euler forms of 2φ1.

pub(super) fn heine_sample(d: &mut Draw, _m: usize, _ctx: &QContext) -> Sample {
    let mut s = Sample::default();
    for n in ["A", "B", "C"] {
        s.set(n, d.rc(0.2, 0.9));
    }
    s.set("x", d.rc(0.1, 0.6));
    s
}

fn abcx(s: &Sample) -> [C64; 4] {
    ["A", "B", "C", "x"].map(|n| s.get(n))
}

pub(super) fn heine_ok(s: &Sample, _m: usize, ctx: &QContext) -> bool {
    let [a, b, c, x] = abcx(s);
    (c / b).norm() < 0.8 && (a * b * x / c).norm() < 0.8 && gaps_ok(&[c, b * x, x, c / b, a * b * x / c], ctx)
}

pub(super) fn heine_lhs(s: &Sample, _m: usize, ctx: &QContext) -> Vals {
    let [a, b, c, x] = abcx(s);
    Ok(vec![val(rphis(&[a, b], &[c], x, ctx))?; 3])
}

pub(super) fn heine_rhs(s: &Sample, _m: usize, ctx: &QContext) -> Vals {
    let [a, b, c, x] = abcx(s);
    let r2 = pinf(&[c / b, b * x], ctx) / pinf(&[c, x], ctx) * val(rphis(&[a * b * x / c, b], &[b * x], c / b, ctx))?;
    let r3 = pinf(&[b * x], ctx) / pinf(&[x], ctx) * val(rphis(&[b, c / a], &[c, b * x], a * x, ctx))?;
    let z = a * b * x / c;
    let e = pinf(&[z], ctx) / pinf(&[x], ctx) * val(rphis(&[c / a, c / b], &[c], z, ctx))?;
    Ok(vec![r2, r3, e])
}

// φ_{i,j} in closed form and the three-point identity.

pub(super) fn closed_sample(d: &mut Draw, m: usize, ctx: &QContext) -> Sample {
    let q = ctx.q;
    let x = d.rc(0.2, 0.6);
    let a = d.rcs(m + 2, 0.2, 0.9);
    let mut s = Sample::default();
    s.set("x", x);
    s.set("a1", q * q * x);
    s.set("b1", x);
    for (i, &ai) in a.iter().enumerate() {
        s.set(format!("a{}", i + 2), ai);
        s.set(format!("b{}", i + 2), ai);
    }
    s
}

pub(super) fn closed_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let a = s.vec("a", m + 3);
    let x = s.get("x");
    let mut rs = cross_ratios(&a);
    rs.extend(a[1..].iter().map(|&ai| x / ai));
    gaps_ok(&rs, ctx)
}

pub(super) fn closed_lhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let bp = bp_of(s, m);
    (2..=m + 2).map(|i| rp_integral(&bp, i, m + 3, ctx)).collect()
}

pub(super) fn closed_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let q = ctx.q;
    let (a, x) = (s.vec("a", m + 3), s.get("x"));
    let last = a[m + 2];
    Ok(a[1..=m + 1].iter().map(|&ai| q * (ai - last) / ((ai - x * q) * (last - x * q))).collect())
}

pub(super) fn cocycle_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    // φ_{i,k} can be far smaller than the two summands when the outer
    // endpoints carry close Jackson values.
    let bp = bp_of(s, m);
    balanced_ok(s, m, ctx, f64::INFINITY)
        && triples(m).iter().all(|&(i, j, k)| {
            matches!((rp_integral(&bp, i, j, ctx), rp_integral(&bp, j, k, ctx)), (Ok(ij), Ok(jk)) if no_cancellation(&[ij, jk]))
        })
}

fn triples(m: usize) -> [(usize, usize, usize); 2] {
    [(1, 2, m + 3), (m + 3, m + 1, 2)]
}

pub(super) fn cocycle_lhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let bp = bp_of(s, m);
    triples(m).iter().map(|&(i, j, k)| Ok(rp_integral(&bp, i, j, ctx)? + rp_integral(&bp, j, k, ctx)?)).collect()
}

pub(super) fn cocycle_rhs(s: &Sample, m: usize, ctx: &QContext) -> Vals {
    let bp = bp_of(s, m);
    triples(m).iter().map(|&(i, _, k)| rp_integral(&bp, i, k, ctx)).collect()
}
