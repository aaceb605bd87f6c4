//! Operator cases: residuals of the q-difference systems on their integral
//! and series solutions, the E_M constant and factorization, and the
//! Casorati independence check.

use super::cases::{balanced_ok, bp_of, cross_ratios, gaps_ok, memo, memo_point, prod, ratios, system_residual, val};
use super::series_cases::{qal_gaps, qal_of};
use super::{Draw, Outcome, Sample};
use crate::error::{QError, QResult};
use crate::jackson::{degene_integral, jackson_0_to, jackson_between, psi_ratio, rp_integral, BalancedParams};
use crate::operators::{
    build_degene_system, build_em, build_jp_factorization, build_jp_general, build_qal_system, build_rp_system, casorati,
    get, op_apply, op_apply_scaled, residual, shift_of, LatticeFunction, Point, Shift,
};
use crate::qcore::{QContext, C64, ONE};
use crate::series::{degene_solution, phi_d, qal_solution, w_normalized, DegeneParams, QalParams};

// The E_M operator in x for the Jordan–Pochhammer integrand
// (Axt)_∞/(Bxt)_∞ ∏_{i=2}^{M+3} (a_i t)_∞/(b_i t)_∞ with A∏a = q²B∏b.

struct Em {
    big_a: C64,
    big_b: C64,
    a: Vec<C64>,
    b: Vec<C64>,
    x: C64,
}

fn em_of(s: &Sample, m: usize) -> Em {
    let hat = |p: &str| (2..=m + 3).map(|i| s.get(&format!("{p}{i}"))).collect();
    Em { big_a: s.get("A"), big_b: s.get("B"), a: hat("a"), b: hat("b"), x: s.get("x") }
}

pub(super) fn em_sample(d: &mut Draw, m: usize, ctx: &QContext) -> Sample {
    let q = ctx.q;
    let (big_a, big_b) = (d.rc(0.3, 0.9), d.rc(0.3, 0.9));
    let a = d.rcs(m + 2, 0.3, 0.9);
    let mut b = d.rcs(m + 1, 0.3, 0.9);
    b.push(big_a * prod(&a) / (q * q * big_b * prod(&b)));
    let mut s = Sample::default();
    s.set("A", big_a);
    s.set("B", big_b);
    for i in 0..m + 2 {
        s.set(format!("a{}", i + 2), a[i]);
        s.set(format!("b{}", i + 2), b[i]);
    }
    s.set("x", d.rc(0.3, 0.9));
    s
}

pub(super) fn em_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let e = em_of(s, m);
    let mut num = vec![e.big_a * e.x];
    num.extend_from_slice(&e.a);
    let mut den = vec![e.big_b * e.x];
    den.extend_from_slice(&e.b);
    (0.2..=3.0).contains(&e.b[m + 1].norm()) && gaps_ok(&cross_ratios(&num), ctx) && gaps_ok(&ratios(&num, &den), ctx)
}

/// The anchors q/a_2..q/a_{M+3} and q/(Ax), as functions of the point.
fn anchors(m: usize, q: C64) -> Vec<(String, Box<dyn Fn(&Point) -> C64 + Send + Sync>)> {
    let mut out: Vec<(String, Box<dyn Fn(&Point) -> C64 + Send + Sync>)> = (2..=m + 3)
        .map(|i| {
            let name = format!("a{i}");
            let n2 = name.clone();
            (format!("q/{name}"), Box::new(move |p: &Point| q / get(p, &n2)) as Box<dyn Fn(&Point) -> C64 + Send + Sync>)
        })
        .collect();
    out.push(("q/(Ax)".into(), Box::new(move |p: &Point| q / (get(p, "A") * get(p, "x")))));
    out
}

fn jp_integrand(p: &Point, m: usize, t: C64, ctx: &QContext) -> QResult<C64> {
    let x = get(p, "x");
    let mut num = vec![get(p, "A") * x];
    let mut den = vec![get(p, "B") * x];
    for i in 2..=m + 3 {
        num.push(get(p, &format!("a{i}")));
        den.push(get(p, &format!("b{i}")));
    }
    psi_ratio(&num, &den, t, ctx)
}

fn em_operator(s: &Sample, m: usize, ctx: &QContext) -> crate::operators::ShiftOperator {
    let e = em_of(s, m);
    build_em(m, e.big_a, e.big_b, &e.a, &e.b, ctx.q)
}

pub(super) fn em_constant_lhs(s: &Sample, m: usize, ctx: &QContext) -> QResult<Vec<C64>> {
    let op = em_operator(s, m, ctx);
    let c = *ctx;
    anchors(m, ctx.q)
        .into_iter()
        .map(|(_, tau)| {
            let f = memo_point(s.point.clone(), c.q, move |p| {
                let g = |t: C64| jp_integrand(p, m, t, &c);
                jackson_0_to(tau(p), &g, &c)
            });
            op_apply(&op, &f, &Shift::new())
        })
        .collect()
}

pub(super) fn em_constant_rhs(s: &Sample, m: usize, ctx: &QContext) -> QResult<Vec<C64>> {
    let q = ctx.q;
    let e = em_of(s, m);
    let p: C64 = (0..m).map(|i| e.big_b - e.big_a * ctx.qn(i as i64)).product();
    Ok(vec![-p * q * (1.0 - q) * e.x.powi(m as i32 + 1); m + 3])
}

pub(super) fn em_annihilate(s: &Sample, m: usize, ctx: &QContext) -> QResult<Outcome> {
    let op = em_operator(s, m, ctx);
    let c = *ctx;
    let names: Vec<String> = anchors(m, ctx.q).into_iter().map(|(n, _)| n).collect();
    let mut worst = (f64::NEG_INFINITY, String::new());
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            let f = memo_point(s.point.clone(), c.q, move |p| {
                let all = anchors(m, c.q);
                let g = |t: C64| jp_integrand(p, m, t, &c);
                jackson_between((all[i].1)(p), (all[j].1)(p), &g, &c)
            });
            let r = residual(&op, &f, &[Shift::new()])?;
            if r.relative > worst.0 {
                worst = (r.relative, format!("∫ from {} to {}", names[i], names[j]));
            }
        }
    }
    Ok(Outcome { lhs: None, rhs: None, rel_error: worst.0, note: Some(format!("worst: {}", worst.1)) })
}

pub(super) const FACTOR_FUNCTIONS: usize = 10;
const FACTOR_DEGREE: usize = 5;

pub(super) fn fact_sample(d: &mut Draw, m: usize, ctx: &QContext) -> Sample {
    let mut s = em_sample(d, m, ctx);
    for k in 0..FACTOR_FUNCTIONS {
        for j in 0..=FACTOR_DEGREE {
            s.set(format!("g{k}_{j}"), d.rc(0.2, 0.9));
        }
    }
    s
}

pub(super) fn fact_ok(s: &Sample, _m: usize, ctx: &QContext) -> bool {
    gaps_ok(&[s.get("x")], ctx)
}

/// Both operators applied to polynomial-plus-pole test functions of x,
/// compared against the scale Σ|coeff·f|.
pub(super) fn em_factorization(s: &Sample, m: usize, ctx: &QContext) -> QResult<Outcome> {
    let q = ctx.q;
    let e = em_of(s, m);
    let left = build_jp_factorization(m, e.big_a, e.big_b, &e.a, &e.b, q);
    let right = build_jp_general(m, e.big_a, e.big_b, &e.a, &e.b, q, q);
    let mut worst = (f64::NEG_INFINITY, ONE, ONE);
    for k in 0..FACTOR_FUNCTIONS {
        let cs: Vec<C64> = (0..=FACTOR_DEGREE).map(|j| s.get(&format!("g{k}_{j}"))).collect();
        let f = LatticeFunction::from_point(s.point.clone(), q, move |p| {
            let x = get(p, "x");
            Ok(cs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c) + cs[0] / (ONE - x))
        });
        let (l, sl) = op_apply_scaled(&left, &f, &Shift::new())?;
        let (r, sr) = op_apply_scaled(&right, &f, &Shift::new())?;
        let err = (l - r).norm() / sl.max(sr).max(1e-300);
        if err > worst.0 {
            worst = (err, l, r);
        }
    }
    Ok(Outcome {
        lhs: Some(worst.1),
        rhs: Some(worst.2),
        rel_error: worst.0,
        note: Some(format!("worst of {FACTOR_FUNCTIONS} test functions, relative to Σ|coeff·f|")),
    })
}

// q-RP^M on the balanced integrals and the normalized W.

pub(super) fn qrp_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    balanced_ok(s, m, ctx, f64::INFINITY)
}

pub(super) fn qrp_w_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let q2 = ctx.q.norm().powi(2);
    balanced_ok(s, m, ctx, 0.6 * q2)
}

fn balanced_from(p: &Point, m: usize) -> BalancedParams {
    let v = |pre: &str| (1..=m + 3).map(|i| get(p, &format!("{pre}{i}"))).collect();
    BalancedParams { a: v("a"), b: v("b") }
}

fn phi_fn(s: &Sample, m: usize, i: usize, j: usize, ctx: &QContext) -> LatticeFunction {
    let c = *ctx;
    memo_point(s.point.clone(), c.q, move |p| rp_integral(&balanced_from(p, m), i, j, &c))
}

pub(super) fn qrp_system(s: &Sample, m: usize, ctx: &QContext) -> QResult<Outcome> {
    let ops = build_rp_system(m, ctx.q);
    let mut fns = Vec::new();
    for i in 1..=m + 3 {
        for j in i + 1..=m + 3 {
            fns.push((format!("φ_{{{i},{j}}}"), phi_fn(s, m, i, j, ctx)));
        }
    }
    system_residual(&ops, &fns)
}

pub(super) fn qrp_kajihara(s: &Sample, m: usize, ctx: &QContext) -> QResult<Outcome> {
    let c = *ctx;
    let f = memo_point(s.point.clone(), c.q, move |p| val(w_normalized(&balanced_from(p, m), &c)));
    system_residual(&build_rp_system(m, ctx.q), &[("W".into(), f)])
}

/// Casorati matrix of φ_{k,M+3}, k = 2..M+2, under T = T_{a1}T_{b1}.
pub fn independence_columns(bp: &BalancedParams, ctx: &QContext) -> Vec<LatticeFunction> {
    let m = bp.m();
    let mut s = Sample::default();
    s.set_vec("a", &bp.a);
    s.set_vec("b", &bp.b);
    (2..=m + 2).map(|k| phi_fn(&s, m, k, m + 3, ctx)).collect()
}

pub fn independence_shift() -> Shift {
    shift_of(&[("a1", 1), ("b1", 1)])
}

/// Smallest accepted |φ_{i,k}| (i, k ∈ 2..M+2) relative to the largest
/// |φ_{i,M+3}|. Below it the columns share a dominant common part and the
/// Casorati ratio measures that overlap rather than independence.
pub const MIN_SEPARATION: f64 = 0.1;

/// Genericity of a balanced point for the independence test.
pub fn independence_generic(bp: &BalancedParams, ctx: &QContext) -> bool {
    let m = bp.m();
    let top = (2..=m + 2).filter_map(|i| rp_integral(bp, i, m + 3, ctx).ok()).map(|v| v.norm()).fold(0.0, f64::max);
    let mut sep = f64::INFINITY;
    for i in 2..=m + 2 {
        for k in i + 1..=m + 2 {
            match rp_integral(bp, i, k, ctx) {
                Ok(v) => sep = sep.min(v.norm()),
                Err(_) => return false,
            }
        }
    }
    top.is_finite() && top > 0.0 && sep >= MIN_SEPARATION * top
}

/// Casorati test of φ_{2,M+3}, …, φ_{M+2,M+3} along T = T_{a_1}T_{b_1}.
pub fn independence_check(bp: &BalancedParams, ctx: &QContext) -> QResult<bool> {
    bp.check_shape()?;
    Ok(casorati(&independence_columns(bp, ctx), &independence_shift())?.independent)
}

pub(super) fn qrp_independence_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    qrp_ok(s, m, ctx) && independence_generic(&bp_of(s, m), ctx)
}

pub(super) fn qrp_independence(s: &Sample, m: usize, ctx: &QContext) -> QResult<Outcome> {
    let ind = casorati(&independence_columns(&bp_of(s, m), ctx), &independence_shift())?;
    let rel_error = if ind.det.norm() == 0.0 { 1e300 } else { (ind.row_norm_product / ind.det.norm()).min(1e300) };
    Ok(Outcome {
        lhs: Some(ind.det),
        rhs: None,
        rel_error,
        note: Some(format!("|det|/∏ row norms = {:.3e}", ind.ratio)),
    })
}

// The degenerate system q-RP^M_degene.

pub(super) fn deg_of(s: &Sample, m: usize, ctx: &QContext) -> QResult<DegeneParams> {
    DegeneParams::new(s.vec("a", m + 1), s.vec("b", m + 1), s.get("lambda"), ctx)
}

pub(super) fn draw_lambda(d: &mut Draw) -> C64 {
    C64::new(d.real(0.3, 1.5), d.real(-0.5, 0.5))
}

pub(super) fn deg_sample(d: &mut Draw, m: usize, _ctx: &QContext) -> Sample {
    let mut s = Sample::default();
    s.set_vec("a", &d.rcs(m + 1, 0.4, 0.95));
    let mut b = d.rcs(m, 0.2, 0.7);
    b.push(d.rc(2.3, 3.5));
    s.set_vec("b", &b);
    s.set("lambda", draw_lambda(d));
    s
}

/// Lattice gaps for the integrals and the three families of a degenerate
/// point.
pub(super) fn deg_gaps(p: &DegeneParams, ctx: &QContext) -> bool {
    let m = p.m();
    let (am, ql) = (p.a[m], p.qlambda);
    let mut rs = cross_ratios(&p.a);
    rs.extend(ratios(&p.a, &p.b));
    rs.extend(p.a.iter().map(|&ai| ql * ai / am));
    rs.extend(p.b.iter().map(|&bj| ql * bj / am));
    rs.extend(p.b.iter().map(|&bj| bj / am));
    rs.extend([ql, p.q_beta(ctx)]);
    gaps_ok(&rs, ctx)
}

pub(super) fn deg_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let Ok(p) = deg_of(s, m, ctx) else { return false };
    let q = ctx.q.norm();
    (ONE / p.q_beta(ctx)).norm() < 0.9 * q * q && (ONE / p.b[m]).norm() < 0.9 * q && deg_gaps(&p, ctx)
}

/// A function of the degenerate point, with shifts of a_i, b_i applied
/// through the exact q-steps of the carried powers.
fn deg_fn(
    base: &DegeneParams,
    point: Point,
    ctx: &QContext,
    f: impl Fn(&DegeneParams, &QContext) -> QResult<C64> + Send + Sync + 'static,
) -> LatticeFunction {
    let (base, c) = (base.clone(), *ctx);
    let n = base.a.len();
    memo(point, move |s| {
        let off = |p: &str, i: usize| s.get(&format!("{p}{}", i + 1)).copied().unwrap_or(0);
        let da: Vec<i64> = (0..n).map(|i| off("a", i)).collect();
        let db: Vec<i64> = (0..n).map(|i| off("b", i)).collect();
        f(&base.shifted(&da, &db, &c), &c)
    })
}

fn deg_point(p: &DegeneParams) -> Point {
    let mut s = Sample::default();
    s.set_vec("a", &p.a);
    s.set_vec("b", &p.b);
    s.point
}

pub(super) fn degene_system(s: &Sample, m: usize, ctx: &QContext) -> QResult<Outcome> {
    let p = deg_of(s, m, ctx)?;
    let fns: Vec<(String, LatticeFunction)> = (1..=m + 1)
        .map(|j| (format!("∫_0^(q/a{j})"), deg_fn(&p, deg_point(&p), ctx, move |d, c| degene_integral(j, d, c))))
        .collect();
    system_residual(&build_degene_system(m, p.qlambda, ctx.q), &fns)
}

pub(super) fn degene_solutions(s: &Sample, m: usize, ctx: &QContext) -> QResult<Outcome> {
    let p = deg_of(s, m, ctx)?;
    let fns: Vec<(String, LatticeFunction)> = (1..=3)
        .map(|k| (format!("family {k}"), deg_fn(&p, deg_point(&p), ctx, move |d, c| val(degene_solution(k, d, c)))))
        .collect();
    system_residual(&build_degene_system(m, p.qlambda, ctx.q), &fns)
}

// The q-Appell–Lauricella system.

pub(super) fn qal_ops_sample(d: &mut Draw, m: usize, _ctx: &QContext) -> Sample {
    let mut s = Sample::default();
    s.set("A", d.rc(0.2, 0.7));
    s.set("C", d.rc(0.1, 0.4));
    s.set_vec("B", &d.rcs(m, 0.6, 1.2));
    s.set_vec("x", &d.rcs(m, 0.05, 0.25));
    s
}

pub(super) fn qal_ops_ok(s: &Sample, m: usize, ctx: &QContext) -> bool {
    let p = qal_of(s, m);
    (p.c / prod(&p.b)).norm() < 0.8 && qal_gaps(&p, ctx)
}

fn qal_from(p: &Point, m: usize) -> QalParams {
    QalParams {
        a: get(p, "A"),
        b: (1..=m).map(|i| get(p, &format!("B{i}"))).collect(),
        c: get(p, "C"),
        x: (1..=m).map(|i| get(p, &format!("x{i}"))).collect(),
    }
}

pub(super) fn qal_phid(s: &Sample, m: usize, ctx: &QContext) -> QResult<Outcome> {
    let c = *ctx;
    let f = memo_point(s.point.clone(), c.q, move |p| val(phi_d(&qal_from(p, m), &c)));
    system_residual(&build_qal_system(m, ctx.q), &[("φ_D".into(), f)])
}

pub(super) fn qal_solutions(s: &Sample, m: usize, ctx: &QContext) -> QResult<Outcome> {
    let c = *ctx;
    let fns: Vec<(String, LatticeFunction)> = (1..=3)
        .map(|k| (format!("family {k}"), memo_point(s.point.clone(), c.q, move |p| val(qal_solution(k, &qal_from(p, m), &c)))))
        .collect();
    system_residual(&build_qal_system(m, ctx.q), &fns)
}

/// The degenerate point of a q-AL point: a = (B_i x_i, q), b = (x_i, C/A),
/// q^λ = A/q.
pub(super) fn qal_to_degene(p: &QalParams, ctx: &QContext) -> QResult<DegeneParams> {
    let q = ctx.q;
    let mut a: Vec<C64> = p.b.iter().zip(&p.x).map(|(&bi, &xi)| bi * xi).collect();
    a.push(q);
    let mut b = p.x.clone();
    b.push(p.c / p.a);
    let lambda = (p.a / q).ln() / q.ln();
    DegeneParams::new(a, b, lambda, ctx)
}

/// T_{x_i} on a q-AL function is the joint shift of a_i and b_i.
fn via_degene(
    base: &DegeneParams,
    point: Point,
    m: usize,
    ctx: &QContext,
    f: impl Fn(&DegeneParams, &QContext) -> QResult<C64> + Send + Sync + 'static,
) -> LatticeFunction {
    let (base, c) = (base.clone(), *ctx);
    memo(point, move |s| {
        let mut d: Vec<i64> = (1..=m).map(|i| s.get(&format!("x{i}")).copied().unwrap_or(0)).collect();
        d.push(0);
        f(&base.shifted(&d, &d, &c), &c)
    })
}

pub(super) fn degene_implies_qal(s: &Sample, m: usize, ctx: &QContext) -> QResult<Outcome> {
    let p = qal_to_degene(&qal_of(s, m), ctx)?;
    if (p.qlambda - s.get("A") / ctx.q).norm() > 1e-12 * p.qlambda.norm() {
        return Err(QError::Domain("q^λ does not reproduce A/q".into()));
    }
    let mut fns = Vec::new();
    for k in 1..=3 {
        fns.push((format!("family {k}"), via_degene(&p, s.point.clone(), m, ctx, move |d, c| val(degene_solution(k, d, c)))));
    }
    for j in 1..=m + 1 {
        fns.push((format!("∫_0^(q/a{j})"), via_degene(&p, s.point.clone(), m, ctx, move |d, c| degene_integral(j, d, c))));
    }
    system_residual(&build_qal_system(m, ctx.q), &fns)
}
