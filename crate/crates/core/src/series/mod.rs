//! Multi-index series engine: shell-ordered summation with stall
//! detection, exact finite summation for terminating series, and the
//! evaluators built on it.

mod basic;
mod degene;
mod kajihara;
mod qal;

pub use basic::{bilateral_psi, rphis, vwp_w};
pub use degene::{degene_family_sum, degene_solution, degene_stage_sum, DegeneParams};
pub(crate) use kajihara::w_series_params;
pub use kajihara::{kajihara_w, w_normalized, KajiharaParams};
pub use qal::{phi_d, qal_solution, QalParams};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{QError, QResult};
use crate::qcore::{QContext, C64, ONE, ZERO};

/// A multi-index l ∈ Z_{≥0}^M.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesResult {
    pub value: C64,
    pub shells_used: usize,
    pub converged: bool,
    pub last_shell_magnitude: f64,
    /// Σ|term| / |Σ term|, the factor by which rounding in the terms is
    /// amplified in the sum. Unchanged by a constant prefactor.
    pub condition: f64,
}

/// Σ|term| / |Σ term|, with 1 for an all-zero sum.
pub fn condition_of(value: C64, magnitude: f64) -> f64 {
    if magnitude == 0.0 {
        1.0
    } else {
        magnitude / value.norm()
    }
}

/// Calls `f` on every l with |l| = n, in lexicographic order.
pub fn for_each_in_shell(n: usize, m: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(pos: usize, left: usize, l: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if pos + 1 == l.len() {
            l[pos] = left;
            f(l);
            return;
        }
        for k in (0..=left).rev() {
            l[pos] = k;
            rec(pos + 1, left - k, l, f);
        }
    }
    if m == 0 {
        if n == 0 {
            f(&[]);
        }
        return;
    }
    let mut l = vec![0; m];
    rec(0, n, &mut l, f);
}

pub type Term<'a> = dyn FnMut(&[usize]) -> C64 + 'a;

fn checked(term: &mut Term, l: &[usize]) -> QResult<C64> {
    let t = term(l);
    if t.re.is_finite() && t.im.is_finite() {
        Ok(t)
    } else {
        Err(QError::TermEvaluation { index: l.to_vec(), msg: "non-finite term (vanishing denominator?)".into() })
    }
}

/// Sum of one shell and the sum of its term magnitudes; `keep` filters indices.
fn shell_sum(term: &mut Term, n: usize, m: usize, keep: &dyn Fn(&[usize]) -> bool) -> QResult<(C64, f64)> {
    let mut sum = ZERO;
    let mut mag = 0.0;
    let mut err = None;
    for_each_in_shell(n, m, &mut |l| {
        if err.is_some() || !keep(l) {
            return;
        }
        match checked(term, l) {
            Ok(t) => {
                sum += t;
                mag += t.norm();
            }
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok((sum, mag)),
    }
}

/// Σ_l term(l) shell by shell until `stall_window` consecutive shells are
/// negligible against the partial sum, or the shell cap is reached.
pub fn sum_shells(term: &mut Term, m: usize, ctx: &QContext) -> QResult<SeriesResult> {
    let mut total = ZERO;
    let mut absolute = 0.0;
    let mut quiet = 0;
    let mut last = f64::INFINITY;
    for n in 0..=ctx.series_shell_cap {
        let (s, mag) = shell_sum(term, n, m, &|_| true)?;
        total += s;
        absolute += mag;
        last = mag;
        if mag <= ctx.rel_tol * total.norm().max(1.0) {
            quiet += 1;
            if quiet >= ctx.stall_window {
                return finish(total, n + 1, true, last, absolute);
            }
        } else {
            quiet = 0;
        }
    }
    finish(total, ctx.series_shell_cap + 1, false, last, absolute)
}

/// Exact finite sum over the shells 0..=n.
pub fn sum_shells_through(term: &mut Term, m: usize, n: usize) -> QResult<SeriesResult> {
    let mut total = ZERO;
    let mut absolute = 0.0;
    let mut last = 0.0;
    for k in 0..=n {
        let (s, mag) = shell_sum(term, k, m, &|_| true)?;
        total += s;
        absolute += mag;
        last = mag;
    }
    finish(total, n + 1, true, last, absolute)
}

/// Exact finite sum over the box l_i ≤ bounds_i, in shell order.
pub fn sum_box(term: &mut Term, bounds: &[usize]) -> QResult<SeriesResult> {
    let m = bounds.len();
    let top: usize = bounds.iter().sum();
    let mut total = ZERO;
    let mut absolute = 0.0;
    let mut last = 0.0;
    for k in 0..=top {
        let (s, mag) = shell_sum(term, k, m, &|l| l.iter().zip(bounds).all(|(a, b)| a <= b))?;
        total += s;
        absolute += mag;
        last = mag;
    }
    finish(total, top + 1, true, last, absolute)
}

fn finish(value: C64, shells_used: usize, converged: bool, last: f64, absolute: f64) -> QResult<SeriesResult> {
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(QError::NonFinite("series partial sum".into()));
    }
    let condition = condition_of(value, absolute);
    Ok(SeriesResult { value, shells_used, converged, last_shell_magnitude: last, condition })
}

/// Requires convergence, turning a capped sum into an error.
pub fn converged(r: SeriesResult, what: &str) -> QResult<SeriesResult> {
    if r.converged {
        Ok(r)
    } else {
        Err(QError::NoConvergence(format!(
            "{what}: shell cap reached after {} shells (last shell magnitude {:.3e})",
            r.shells_used, r.last_shell_magnitude
        )))
    }
}

/// Δ(x q^l)/Δ(x) = ∏_{i<j} (x_i q^{l_i} − x_j q^{l_j})/(x_i − x_j).
pub fn vandermonde_ratio(x: &[C64], l: &[usize], ctx: &QContext) -> C64 {
    let mut p = ONE;
    for i in 0..x.len() {
        let xi = x[i] * ctx.qn(l[i] as i64);
        for j in i + 1..x.len() {
            let xj = x[j] * ctx.qn(l[j] as i64);
            p *= (xi - xj) / (x[i] - x[j]);
        }
    }
    p
}

/// ∏(num)_n / ∏(den)_n for n = 0, 1, 2, … grown on demand.
#[derive(Debug, Clone)]
pub struct PochRatio {
    num: Vec<C64>,
    den: Vec<C64>,
    q: C64,
    vals: Vec<C64>,
}

impl PochRatio {
    pub fn new(num: Vec<C64>, den: Vec<C64>, ctx: &QContext) -> Self {
        PochRatio { num, den, q: ctx.q, vals: vec![ONE] }
    }

    pub fn get(&mut self, n: usize) -> C64 {
        while self.vals.len() <= n {
            let k = self.vals.len() - 1;
            let qk = self.q.powi(k as i32);
            let mut r = *self.vals.last().unwrap();
            for &a in &self.num {
                r *= ONE - a * qk;
            }
            for &b in &self.den {
                r /= ONE - b * qk;
            }
            self.vals.push(r);
        }
        self.vals[n]
    }
}

/// Cached powers z^n.
#[derive(Debug, Clone)]
pub struct Powers {
    z: C64,
    vals: Vec<C64>,
}

impl Powers {
    pub fn new(z: C64) -> Self {
        Powers { z, vals: vec![ONE] }
    }

    pub fn get(&mut self, n: usize) -> C64 {
        while self.vals.len() <= n {
            let last = *self.vals.last().unwrap();
            self.vals.push(last * self.z);
        }
        self.vals[n]
    }
}

/// Pre-flight convergence diagnostic: all directional term ratios
/// |term(l + e_m)/term(l)| at l ≈ probe_scale·direction are below 1 − 1e-6.
pub fn ratio_test(term: &mut Term, m: usize, probe_scale: usize) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut saw_nonzero = false;
    let mut saw_zero = false;
    for _ in 0..8 {
        let dir: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
        let top = dir.iter().cloned().fold(0.0, f64::max);
        let l: Vec<usize> = dir.iter().map(|d| (d / top * probe_scale as f64).round() as usize).collect();
        let t0 = term(&l);
        if t0.norm() == 0.0 || !t0.re.is_finite() || !t0.im.is_finite() {
            saw_zero = true;
            continue;
        }
        saw_nonzero = true;
        for k in 0..m {
            let mut l1 = l.clone();
            l1[k] += 1;
            let g = (term(&l1) / t0).norm();
            if !(g < 1.0 - 1e-6) {
                return false;
            }
        }
    }
    // An identically zero series is vacuously convergent.
    !(saw_zero && saw_nonzero)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> QContext {
        QContext::default()
    }

    #[test]
    fn shells_enumerate_compositions() {
        let mut seen = Vec::new();
        for_each_in_shell(3, 2, &mut |l| seen.push(l.to_vec()));
        assert_eq!(seen, vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]]);
        let mut count = 0;
        for_each_in_shell(5, 3, &mut |_| count += 1);
        assert_eq!(count, 21);
    }

    #[test]
    fn trivial_sums() {
        let c = ctx();
        let r = sum_shells(&mut |_| ZERO, 2, &c).unwrap();
        assert!(r.converged && r.value == ZERO);
        let r = sum_shells(&mut |l: &[usize]| if l.iter().sum::<usize>() == 0 { ONE } else { ZERO }, 2, &c).unwrap();
        assert_eq!(r.value, ONE);
        let r = sum_shells(&mut |l: &[usize]| C64::new(0.5f64.powi(l[0] as i32), 0.0), 1, &c).unwrap();
        assert!(r.converged);
        assert!((r.value - 2.0).norm() < 1e-15);
    }

    #[test]
    fn shell_cap_reports_non_convergence() {
        let c = ctx().with_shell_cap(10);
        let r = sum_shells(&mut |l: &[usize]| C64::new(0.99f64.powi(l[0] as i32), 0.0), 1, &c).unwrap();
        assert!(!r.converged);
        assert!(converged(r, "geometric").is_err());
    }

    #[test]
    fn condition_measures_cancellation() {
        let c = ctx();
        let r = sum_shells(&mut |l: &[usize]| C64::new(0.5f64.powi(l[0] as i32), 0.0), 1, &c).unwrap();
        assert!((r.condition - 1.0).abs() < 1e-15);
        // 1000 − 0.999 − 0.999² − … sums to 1 with Σ|term| = 1999.
        let mut term = |l: &[usize]| if l[0] == 0 { C64::new(1000.0, 0.0) } else { C64::new(-0.999f64.powi(l[0] as i32), 0.0) };
        let r = sum_shells(&mut term, 1, &c.with_shell_cap(100_000)).unwrap();
        assert!(r.converged && (r.condition - 1999.0).abs() < 1.0, "{:?}", r);
        assert_eq!(condition_of(ZERO, 0.0), 1.0);
        assert_eq!(condition_of(C64::new(1e-3, 0.0), 1.0), 1e3);
    }

    #[test]
    fn vanishing_denominator_is_a_term_error() {
        let c = ctx();
        let err = sum_shells(&mut |l: &[usize]| ONE / C64::new(2.0 - l[0] as f64, 0.0), 1, &c).unwrap_err();
        assert!(matches!(err, QError::TermEvaluation { ref index, .. } if index == &vec![2]));
    }

    #[test]
    fn shell_order_matches_lexicographic_order() {
        let c = ctx();
        let z = [C64::new(0.3, 0.2), C64::new(-0.25, 0.1), C64::new(0.1, -0.4)];
        let term = |l: &[usize]| -> C64 {
            let mut t = ONE;
            for (k, &li) in l.iter().enumerate() {
                t *= z[k].powi(li as i32) / (1.0 + li as f64);
            }
            t * vandermonde_ratio(&[C64::new(0.7, 0.1), C64::new(-0.3, 0.5), C64::new(0.2, -0.6)], l, &c)
        };
        let bounds = [9usize, 7, 8];
        let boxed = sum_box(&mut |l| term(l), &bounds).unwrap().value;
        let mut lex = ZERO;
        for a in 0..=bounds[0] {
            for b in 0..=bounds[1] {
                for d in 0..=bounds[2] {
                    lex += term(&[a, b, d]);
                }
            }
        }
        assert!((boxed - lex).norm() <= 1e-12 * lex.norm().max(1.0));
    }

    #[test]
    fn vandermonde_ratio_trivial_for_one_variable() {
        let c = ctx();
        assert_eq!(vandermonde_ratio(&[C64::new(0.3, 0.0)], &[5], &c), ONE);
        let x = [C64::new(0.3, 0.0), C64::new(0.8, 0.0)];
        let expect = (0.3 * 0.25 - 0.8 * 0.5) / (0.3 - 0.8);
        assert!((vandermonde_ratio(&x, &[2, 1], &c) - expect).norm() < 1e-15);
    }

    #[test]
    fn poch_ratio_matches_direct() {
        let c = ctx();
        let (a, b) = (C64::new(0.3, 0.4), C64::new(-0.7, 0.2));
        let mut r = PochRatio::new(vec![a], vec![b], &c);
        for n in [0usize, 4, 2, 7] {
            let d = crate::qcore::qpoch_finite(a, n as i64, &c).unwrap() / crate::qcore::qpoch_finite(b, n as i64, &c).unwrap();
            assert!((r.get(n) - d).norm() < 1e-14);
        }
    }

    #[test]
    fn ratio_test_zero_series_is_vacuous() {
        assert!(ratio_test(&mut |_| ZERO, 2, 50));
        assert!(ratio_test(&mut |l: &[usize]| C64::new(0.5f64.powi(l.iter().sum::<usize>() as i32), 0.0), 2, 50));
        assert!(!ratio_test(&mut |l: &[usize]| C64::new(1.5f64.powi(l.iter().sum::<usize>() as i32), 0.0), 2, 50));
    }
}
