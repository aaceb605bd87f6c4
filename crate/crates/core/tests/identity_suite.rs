//! Catalog-level properties: the default suite passes, reruns reproduce,
//! and equality cases are not satisfied trivially.

use qrp_core::identities::{
    all_ids, catalog, check, lookup, perturbed_error, run_suite, Body, CheckOptions, CheckReport, Kind,
};
use qrp_core::{QContext, C64};

fn real_q() -> QContext {
    QContext::default()
}

fn complex_q() -> QContext {
    QContext::new(C64::from_polar(0.6, 0.4f64.atan())).unwrap()
}

fn failures(reports: &[CheckReport]) -> Vec<String> {
    reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} seed={} M={} rel_error={:?} {:?}", r.id, r.seed, r.m, r.rel_error, r.reason))
        .collect()
}

#[test]
fn default_suite_passes_at_q_one_half() {
    let reports = run_suite(&all_ids(), 0..10, None, &real_q(), &CheckOptions::default()).unwrap();
    assert!(reports.len() > 500);
    let bad = failures(&reports);
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn default_suite_passes_at_complex_q() {
    let reports = run_suite(&all_ids(), 0..10, None, &complex_q(), &CheckOptions::default()).unwrap();
    let bad = failures(&reports);
    assert!(bad.is_empty(), "{bad:#?}");
}

#[test]
fn reruns_are_identical() {
    let ids: Vec<String> = ["W.symmetry", "qrp.system", "degene.series_limit", "qal.transforms"].map(String::from).to_vec();
    let k = real_q();
    let a = run_suite(&ids, 3..6, Some(&[1, 2]), &k, &CheckOptions::default()).unwrap();
    let b = run_suite(&ids, 3..6, Some(&[1, 2]), &k, &CheckOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn equality_cases_fail_after_a_one_percent_perturbation() {
    let k = real_q();
    // Seeds 2, 3 and 6 give nontrivial terminating lengths for the Kajihara cases.
    for case in catalog().into_iter().filter(|c| matches!(c.body, Body::Equality { .. })) {
        for &m in case.m_range {
            for seed in [2u64, 3, 6] {
                let s = case.sample(seed, m, &k).unwrap();
                for name in s.point.keys() {
                    let e = perturbed_error(&case, &s, name, 1.01, m, &k).unwrap();
                    if case.id == "qal.kajihara_phiD" && m == 1 && name == "x1" {
                        // x enters only through x_i/x_M, so a lone x_1 is a scale.
                        assert!(e < 1e-12, "{} should not see {name}: {e:e}", case.id);
                        continue;
                    }
                    assert!(e > 10.0 * case.tolerance, "{} M={m} seed={seed} {name}: {e:e}", case.id);
                }
            }
        }
    }
}

#[test]
fn terminating_cases_are_exact_to_rounding() {
    let k = real_q();
    for id in ["kajihara.transform", "kajihara.WM3"] {
        let case = lookup(id).unwrap();
        for &m in case.m_range {
            for seed in 0..40 {
                let r = check(id, seed, m, &k).unwrap();
                assert!(r.rel_error.unwrap() <= 1e-12, "{r:?}");
            }
        }
    }
}

#[test]
fn terminating_transformation_covers_every_length_and_is_trivial_at_zero() {
    let k = real_q();
    let case = lookup("kajihara.transform").unwrap();
    let mut seen = std::collections::BTreeMap::new();
    for &m in case.m_range {
        for seed in 0..160 {
            let s = case.sample(seed, m, &k).unwrap();
            let (nn, n) = (s.int("N"), s.int("n"));
            *seen.entry((m, nn, n)).or_insert(0) += 1;
            let out = case.evaluate(&s, m, &k).unwrap();
            assert!(out.rel_error <= 1e-10, "M={m} N={nn} n={n} seed={seed}: {:e}", out.rel_error);
            if n == 0 {
                assert_eq!(out.lhs, Some(C64::new(1.0, 0.0)));
                assert_eq!(out.rhs, Some(C64::new(1.0, 0.0)));
            }
        }
    }
    assert_eq!(seen.len(), 2 * 2 * 4);
    assert!(seen.values().all(|&c| c >= 20), "{seen:?}");
}

#[test]
fn both_routes_to_the_two_parameter_series_agree() {
    let k = real_q();
    let (series, integral) = (lookup("thm31.series").unwrap(), lookup("thm31.integral").unwrap());
    let mut compared = 0;
    for m in 1..=3 {
        for seed in 0..10 {
            let s = series.sample(seed, m, &k).unwrap();
            if !(integral.admissible)(&s, m, &k) {
                continue;
            }
            let a = series.evaluate(&s, m, &k).unwrap().rhs.unwrap();
            let b = integral.evaluate(&s, m, &k).unwrap().rhs.unwrap();
            let e = (a - b).norm() / a.norm().max(b.norm());
            assert!(e <= 1e-7, "M={m} seed={seed}: {e:e}");
            compared += 1;
        }
    }
    assert!(compared >= 20, "only {compared} shared samples");
}

#[test]
fn integral_and_series_forms_of_w_agree_over_25_draws() {
    let k = real_q();
    for m in 1..=3 {
        for seed in 0..25 {
            let r = check("W.integral", seed, m, &k).unwrap();
            assert!(r.rel_error.unwrap() <= 1e-7, "{r:?}");
        }
    }
}

#[test]
fn kinds_and_tolerances_follow_the_tiers() {
    for c in catalog() {
        let expected = match c.kind {
            Kind::Limit => (1e-4..=1e-3).contains(&c.tolerance),
            Kind::Residual => (1e-7..=1e-6).contains(&c.tolerance),
            Kind::Independence => c.tolerance == 1e8,
            Kind::Equality => c.tolerance <= 1e-7,
        };
        assert!(expected, "{} has tolerance {:e}", c.id, c.tolerance);
    }
}
