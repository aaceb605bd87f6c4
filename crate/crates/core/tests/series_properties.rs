//! Numerical properties of the evaluators that sit outside the catalog:
//! the bilateral residue schedule and the Casorati independence test.

use qrp_core::identities::{independence_check, independence_columns, independence_shift, lookup, neville_at_zero};
use qrp_core::jackson::BalancedParams;
use qrp_core::operators::{casorati, LatticeFunction, Point, Shift, INDEPENDENCE_THRESHOLD};
use qrp_core::qcore::pinf;
use qrp_core::series::bilateral_psi;
use qrp_core::{QContext, QResult, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn bilateral_residue_on_the_dyadic_schedule() {
    let ctx = QContext::default().with_shell_cap(100_000);
    let params = [
        (vec![c(0.9, 0.1), c(1.2, -0.2)], vec![c(0.3, 0.1), c(0.5, -0.2)]),
        (vec![c(0.7, 0.0), c(1.1, 0.3), c(0.8, -0.1)], vec![c(0.4, 0.0), c(0.2, 0.2), c(0.6, 0.1)]),
    ];
    for (cs, ds) in params {
        let h: Vec<f64> = (4..=10).map(|k| 0.5f64.powi(k)).collect();
        let v: Vec<C64> = h
            .iter()
            .map(|&d| bilateral_psi(&cs, &ds, c(1.0 - d, 0.0), &ctx).map(|r| d * r.value))
            .collect::<QResult<_>>()
            .unwrap();
        let limit = neville_at_zero(&h, &v).unwrap();
        let expect = pinf(&cs, &ctx) / pinf(&ds, &ctx);
        let e = (limit - expect).norm() / expect.norm();
        assert!(e <= 1e-4, "{limit} vs {expect}: {e:e}");
    }
}

fn sampled(seed: u64, m: usize, ctx: &QContext) -> BalancedParams {
    let s = lookup("qrp.independence").unwrap().sample(seed, m, ctx).unwrap();
    BalancedParams { a: s.vec("a", m + 3), b: s.vec("b", m + 3) }
}

#[test]
fn integrals_are_independent_on_the_acceptance_seeds() {
    for ctx in [QContext::default(), QContext::new(C64::from_polar(0.6, 0.4f64.atan())).unwrap()] {
        for m in 1..=2 {
            for seed in 0..10 {
                let bp = sampled(seed, m, &ctx);
                assert!(independence_check(&bp, &ctx).unwrap(), "M={m} seed={seed} q={}", ctx.q);
            }
        }
    }
}

#[test]
fn duplicated_column_is_singular() {
    let ctx = QContext::default();
    for m in 1..=2 {
        let bp = sampled(1, m, &ctx);
        let mut cols = independence_columns(&bp, &ctx);
        cols[m] = cols[0].clone();
        let ind = casorati(&cols, &independence_shift()).unwrap();
        assert!(!ind.independent && ind.ratio < 1e-12, "{ind:?}");
    }
}

/// a_1 = q²x, b_1 = x and a_i = b_i otherwise; along T_{a1}T_{b1} only x moves.
fn special_point(m: usize, x: C64, ctx: &QContext) -> BalancedParams {
    let rest: Vec<C64> = (0..m + 2).map(|i| c(0.35 + 0.17 * i as f64, 0.05 * (i as f64 - 1.0))).collect();
    let mut a = vec![ctx.q * ctx.q * x];
    a.extend(&rest);
    let mut b = vec![x];
    b.extend(&rest);
    BalancedParams { a, b }
}

fn rational_columns(bp: &BalancedParams, ctx: &QContext) -> Vec<LatticeFunction> {
    let (q, x, l) = (ctx.q, bp.b[0], *bp.a.last().unwrap());
    (1..bp.a.len() - 1)
        .map(|i| {
            let ai = bp.a[i];
            LatticeFunction::new(Point::new(), move |s: &Shift| {
                let xn = x * q.powi(*s.get("b1").unwrap_or(&0) as i32 + 1);
                Ok(q * (ai - l) / ((ai - xn) * (l - xn)))
            })
        })
        .collect()
}

#[test]
fn special_case_determinant_is_nonzero_and_matches_the_integrals() {
    let ctx = QContext::default();
    for m in 1..=3 {
        let bp = special_point(m, c(0.8, 0.3), &ctx);
        bp.validate(&ctx).unwrap();
        let closed = casorati(&rational_columns(&bp, &ctx), &independence_shift()).unwrap();
        let numeric = casorati(&independence_columns(&bp, &ctx), &independence_shift()).unwrap();
        assert!(closed.ratio > 1e3 * INDEPENDENCE_THRESHOLD, "M={m}: {closed:?}");
        assert!(numeric.independent);
        let e = (closed.det - numeric.det).norm() / closed.det.norm();
        assert!(e <= 1e-8, "M={m}: {} vs {}", closed.det, numeric.det);
    }
}
