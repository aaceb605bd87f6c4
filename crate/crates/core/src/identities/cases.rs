//! The registry and the helpers shared by the case evaluators.

use std::collections::HashMap;
use std::sync::Mutex;

use super::{Admissible, Body, Draw, IdentityCase, Kind, Measure, Outcome, Sample, Sampler, Side};
use crate::error::QResult;
use crate::jackson::BalancedParams;
use crate::operators::{residual, shift_point, LatticeFunction, Point, Shift, ShiftOperator};
use crate::qcore::{QContext, C64};
use crate::series::SeriesResult;

use super::limit_cases as lim;
use super::series_cases as ser;
use super::system_cases as sys;

/// Minimum distance |r/q^k − 1| of a sampled ratio from the q-lattice.
pub const MIN_GAP: f64 = 0.02;

/// Largest accepted cancellation Σ|parts| / |Σ parts| in a sampled
/// evaluation. Beyond it a check measures rounding rather than the identity.
pub const MAX_CANCELLATION: f64 = 1e3;

pub(super) fn all() -> Vec<IdentityCase> {
    const M1: &[usize] = &[1];
    const M12: &[usize] = &[1, 2];
    const M123: &[usize] = &[1, 2, 3];
    vec![
        eq("bailey.integral", "Jackson integral of a balanced 4ψ4-type product as a very-well-poised 8W7 (Bailey)", M1, 1e-8, ser::bailey_sample, ser::bailey_ok, ser::bailey_lhs, ser::bailey_rhs),
        eq("bailey.two_4phi3", "8W7 as a sum of two balanced 4φ3 series", M1, 1e-8, ser::two43_sample, ser::two43_ok, ser::two43_lhs, ser::two43_rhs),
        eq("kajihara.transform", "Kajihara's terminating transformation between W^{M,N+2} and W^{N,M+2}", M12, 1e-12, ser::kt_sample, ser::kt_ok, ser::kt_lhs, ser::kt_rhs),
        eq("kajihara.WM3", "terminating W^{M,3} as a single very-well-poised series", M12, 1e-12, ser::wm3_sample, ser::wm3_ok, ser::wm3_lhs, ser::wm3_rhs),
        eq("thm31.series", "W^{M,2} as two balanced series, c1 and c2 interchanged", M123, 1e-8, ser::thm31_sample, ser::thm31_ok, ser::w2_lhs, ser::thm31_series_rhs),
        eq("thm31.integral", "W^{M,2} as a Riemann–Papperitz Jackson integral", M123, 1e-8, ser::thm31_sample, ser::thm31_ok, ser::w2_lhs, ser::thm31_integral_rhs),
        eq("cor33.sym_a", "W^{M,2} symmetry exchanging x_1 with c1c2d/(aq)", M123, 1e-8, ser::thm31_sample, ser::sym_ok, ser::w2_lhs, ser::sym_a_rhs),
        eq("cor33.sym_b", "W^{M,2} symmetry acting on b_1", M123, 1e-8, ser::thm31_sample, ser::sym_ok, ser::w2_lhs, ser::sym_b_rhs),
        eq("cor33.threeterm", "three-term relation for W^{M,2}", M123, 1e-8, ser::threeterm_sample, ser::threeterm_ok, ser::w2_lhs, ser::threeterm_rhs),
        eq("w87.lambda", "8W7 transformation to the λ-parameters", M1, 1e-8, ser::w87_sample, ser::w87_ok, ser::w87_lhs, ser::w87_rhs),
        eq("W.symmetry", "the normalized W is symmetric in a_1..a_{M+1} and in b_1..b_{M+3}", M123, 1e-8, draw_balanced, ser::wsym_ok, ser::wsym_lhs, ser::wsym_rhs),
        eq("W.integral", "the normalized W as φ_{M+2,M+3}/(q(1−q)(q)_∞)", M123, 1e-8, draw_balanced, ser::wint_ok, ser::wint_lhs, ser::wint_rhs),
        eq("EM.constant", "E_M on ∫_0^τ of the Jordan–Pochhammer integrand gives the inhomogeneous constant", M12, 1e-7, sys::em_sample, sys::em_ok, sys::em_constant_lhs, sys::em_constant_rhs),
        measure("EM.annihilate", "E_M annihilates Jackson integrals between two anchors", Kind::Residual, M12, 1e-6, sys::em_sample, sys::em_ok, sys::em_annihilate),
        measure("EM.factorization", "(B−Aq^{-1}T_x)(1−q^{-1-M}T_x)E_M equals the Jordan–Pochhammer operator at q^α = q", Kind::Equality, M123, 1e-10, sys::fact_sample, sys::fact_ok, sys::em_factorization),
        measure("qrp.system", "the integrals φ_{i,j} satisfy q-RP^M", Kind::Residual, M12, 1e-6, draw_balanced, sys::qrp_ok, sys::qrp_system),
        measure("qrp.kajihara_solution", "the normalized W satisfies q-RP^M", Kind::Residual, M12, 1e-6, draw_balanced, sys::qrp_w_ok, sys::qrp_kajihara),
        measure("qrp.independence", "φ_{2,M+3}..φ_{M+2,M+3} are linearly independent (Casorati determinant)", Kind::Independence, M12, 1e8, draw_balanced, sys::qrp_independence_ok, sys::qrp_independence),
        measure("psi.limit", "(1−z)·Σ_{l∈Z}(c)_l/(d)_l z^l → (c)_∞/(d)_∞ as z → 1", Kind::Limit, M12, 1e-4, lim::psi_sample, lim::psi_ok, lim::psi_limit),
        measure("degene.system", "the degenerate Jordan–Pochhammer integrals satisfy q-RP^M_degene", Kind::Residual, M12, 1e-6, sys::deg_sample, sys::deg_ok, sys::degene_system),
        measure("degene.solutions", "the three series families satisfy q-RP^M_degene", Kind::Residual, M12, 1e-6, sys::deg_sample, sys::deg_ok, sys::degene_solutions),
        measure("degene.implies_qal", "q-RP^M_degene restricted to joint shifts implies the q-Appell–Lauricella system", Kind::Residual, M12, 1e-6, sys::qal_ops_sample, sys::qal_ops_ok, sys::degene_implies_qal),
        measure("degene.integral_limit", "staged limit a_{M+3} → ∞, a_{M+2} → 0 of the Riemann–Papperitz integral", Kind::Limit, M12, 1e-3, lim::stage_sample, lim::stage_ok, lim::integral_limit),
        measure("degene.series_limit", "staged limit a_{M+3} → ∞, a_{M+2} → 0 of the W^{M,2} series", Kind::Limit, M12, 1e-3, lim::stage_sample, lim::stage_ok, lim::series_limit),
        measure("qal.phiD", "φ_D satisfies the q-Appell–Lauricella system", Kind::Residual, M123, 1e-7, sys::qal_ops_sample, sys::qal_ops_ok, sys::qal_phid),
        measure("qal.solutions", "the three further series satisfy the q-Appell–Lauricella system", Kind::Residual, M123, 1e-7, sys::qal_ops_sample, sys::qal_ops_ok, sys::qal_solutions),
        eq("qal.transforms", "φ_D equals each solution family times its prefactor", M123, 1e-8, ser::qalt_sample, ser::qalt_ok, ser::qalt_lhs, ser::qalt_rhs),
        eq("qal.andrews", "Andrews' reduction of φ_D to a single r+1φr", M123, 1e-8, ser::qalt_sample, ser::qalt_ok, ser::andrews_lhs, ser::andrews_rhs),
        eq("qal.kajihara_phiD", "a multiple series of Kajihara type as φ_D", M123, 1e-8, ser::remk_sample, ser::remk_ok, ser::remk_lhs, ser::remk_rhs),
        eq("mp1phim.euler", "M+1φM as a multiple series, q-Euler type", M123, 1e-8, ser::gen_sample, ser::gen_ok, ser::gen_lhs, ser::gen_euler_rhs),
        eq("mp1phim.jackson", "M+1φM as a multiple series, Jackson type", M123, 1e-8, ser::gen_sample, ser::gen_ok, ser::gen_lhs, ser::gen_jackson_rhs),
        eq("heine.m1", "2φ1 by the second Heine, Jackson and q-Euler transformations", M1, 1e-10, ser::heine_sample, ser::heine_ok, ser::heine_lhs, ser::heine_rhs),
        eq("phi.closed_form", "φ_{i,M+3} in closed form when a_1 = q²x, b_1 = x and a_i = b_i otherwise", M123, 1e-10, ser::closed_sample, ser::closed_ok, ser::closed_lhs, ser::closed_rhs),
        eq("phi.cocycle", "φ_{i,j} + φ_{j,k} = φ_{i,k}", M123, 1e-11, draw_balanced, ser::cocycle_ok, ser::cocycle_lhs, ser::cocycle_rhs),
    ]
}

#[allow(clippy::too_many_arguments)]
fn eq(
    id: &'static str,
    location: &'static str,
    m_range: &'static [usize],
    tolerance: f64,
    sampler: Sampler,
    admissible: Admissible,
    lhs: Side,
    rhs: Side,
) -> IdentityCase {
    IdentityCase { id, location, kind: Kind::Equality, m_range, tolerance, sampler, admissible, body: Body::Equality { lhs, rhs } }
}

#[allow(clippy::too_many_arguments)]
fn measure(
    id: &'static str,
    location: &'static str,
    kind: Kind,
    m_range: &'static [usize],
    tolerance: f64,
    sampler: Sampler,
    admissible: Admissible,
    f: Measure,
) -> IdentityCase {
    IdentityCase { id, location, kind, m_range, tolerance, sampler, admissible, body: Body::Measure(f) }
}

/// min_k |r/q^k − 1| over the lattice points nearest to r.
pub fn lattice_gap(r: C64, ctx: &QContext) -> f64 {
    if r.norm() == 0.0 || !r.norm().is_finite() {
        return f64::INFINITY;
    }
    let k = (r.norm().ln() / ctx.q.norm().ln()).round() as i64;
    (k - 1..=k + 1).map(|j| (r / ctx.qn(j) - 1.0).norm()).fold(f64::INFINITY, f64::min)
}

pub(super) fn gaps_ok(rs: &[C64], ctx: &QContext) -> bool {
    rs.iter().all(|&r| lattice_gap(r, ctx) >= MIN_GAP)
}

/// Ratios x_i/x_j for i ≠ j.
pub(super) fn cross_ratios(xs: &[C64]) -> Vec<C64> {
    let mut out = Vec::new();
    for (i, &u) in xs.iter().enumerate() {
        for (j, &v) in xs.iter().enumerate() {
            if i != j {
                out.push(u / v);
            }
        }
    }
    out
}

/// All ratios u/v with u in us, v in vs.
pub(super) fn ratios(us: &[C64], vs: &[C64]) -> Vec<C64> {
    us.iter().flat_map(|&u| vs.iter().map(move |&v| u / v)).collect()
}

pub(super) fn val(r: QResult<SeriesResult>) -> QResult<C64> {
    r.map(|s| s.value)
}

/// A series result whose internal cancellation stays within bounds.
pub(super) fn conditioned(r: QResult<SeriesResult>) -> bool {
    matches!(r, Ok(s) if s.condition <= MAX_CANCELLATION)
}

/// |Σ parts| is not swamped by the sizes of the parts.
pub(super) fn no_cancellation(parts: &[C64]) -> bool {
    let total: C64 = parts.iter().sum();
    parts.iter().map(|z| z.norm()).sum::<f64>() <= MAX_CANCELLATION * total.norm()
}

pub(super) fn prod(xs: &[C64]) -> C64 {
    xs.iter().product()
}

pub(super) fn draw_balanced(d: &mut Draw, m: usize, ctx: &QContext) -> Sample {
    let q = ctx.q;
    let a = d.rcs(m + 3, 0.2, 0.9);
    let mut b = d.rcs(m + 2, 0.2, 0.9);
    b.push(prod(&a) / (q * q * prod(&b)));
    let mut s = Sample::default();
    s.set_vec("a", &a);
    s.set_vec("b", &b);
    s
}

/// |b_{M+3}| in [0.2, 2], |a_{M+1}/b_{M+3}| < zmax and every endpoint and
/// pole ratio away from q^Z.
pub(super) fn balanced_ok(s: &Sample, m: usize, ctx: &QContext, zmax: f64) -> bool {
    let (a, b) = (s.vec("a", m + 3), s.vec("b", m + 3));
    let last = b[m + 2].norm();
    (0.2..=2.0).contains(&last)
        && (a[m] / b[m + 2]).norm() < zmax
        && gaps_ok(&cross_ratios(&a), ctx)
        && gaps_ok(&ratios(&a, &b), ctx)
}

pub(super) fn bp_of(s: &Sample, m: usize) -> BalancedParams {
    BalancedParams { a: s.vec("a", m + 3), b: s.vec("b", m + 3) }
}

/// A lattice function that caches its values by offset, since the
/// operators of a system revisit the same shifted points.
pub(super) fn memo(base: Point, f: impl Fn(&Shift) -> QResult<C64> + Send + Sync + 'static) -> LatticeFunction {
    let cache: Mutex<HashMap<Shift, QResult<C64>>> = Mutex::new(HashMap::new());
    LatticeFunction::new(base, move |s| {
        if let Some(v) = cache.lock().expect("cache lock").get(s) {
            return v.clone();
        }
        let v = f(s);
        cache.lock().expect("cache lock").insert(s.clone(), v.clone());
        v
    })
}

/// A memoized function of the shifted point alone.
pub(super) fn memo_point(base: Point, q: C64, f: impl Fn(&Point) -> QResult<C64> + Send + Sync + 'static) -> LatticeFunction {
    let b2 = base.clone();
    memo(base, move |s| f(&shift_point(&b2, s, q)))
}

/// Worst relative residual at the base point over every operator and
/// function.
pub(super) fn system_residual(ops: &[(String, ShiftOperator)], fns: &[(String, LatticeFunction)]) -> QResult<Outcome> {
    let zero = Shift::new();
    let mut worst = (f64::NEG_INFINITY, String::new());
    for (fname, f) in fns {
        for (oname, op) in ops {
            let r = residual(op, f, std::slice::from_ref(&zero))?;
            if r.relative > worst.0 {
                worst = (r.relative, format!("{oname} on {fname}"));
            }
        }
    }
    Ok(Outcome { lhs: None, rhs: None, rel_error: worst.0.max(0.0), note: Some(format!("worst: {}", worst.1)) })
}
