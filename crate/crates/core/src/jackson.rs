//! Jackson q-integrals on lattices τq^Z and the two integrands they are
//! used with: the Riemann–Papperitz product ψ and the Jordan–Pochhammer
//! integrand carrying a t^{α−1} power.

use serde::{Deserialize, Serialize};

use crate::error::{QError, QResult};
use crate::qcore::{QContext, C64, ONE, PRODUCT_EPS, ZERO};
use crate::series::DegeneParams;

/// A numerator factor this close to zero is an exact zero of ψ.
const ZERO_FACTOR_TOL: f64 = 1e-12;
/// A denominator factor this close to zero is a pole.
const POLE_TOL: f64 = 1e-12;
/// Relative tolerance for recognising an anchor on a zero of the integrand.
const TERMINATING_LATTICE_TOL: f64 = 1e-12;

/// a_1..a_{M+3}, b_1..b_{M+3} with a_1⋯a_{M+3} = q² b_1⋯b_{M+3}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancedParams {
    pub a: Vec<C64>,
    pub b: Vec<C64>,
}

impl BalancedParams {
    pub fn m(&self) -> usize {
        self.a.len().saturating_sub(3)
    }

    /// Lengths and nonzero a's; the minimum needed to evaluate integrals.
    pub fn check_shape(&self) -> QResult<()> {
        if self.a.len() < 4 || self.a.len() != self.b.len() {
            return Err(QError::Domain(format!(
                "balanced parameters need M+3 ≥ 4 a's and as many b's, got {} and {}",
                self.a.len(),
                self.b.len()
            )));
        }
        if self.a.iter().any(|ai| ai.norm() == 0.0) {
            return Err(QError::Domain("a_k = 0 is not allowed".into()));
        }
        Ok(())
    }

    /// Full validation: shape, balance and distinct endpoints.
    pub fn validate(&self, ctx: &QContext) -> QResult<()> {
        self.check_shape()?;
        let pa: C64 = self.a.iter().product();
        let pb: C64 = self.b.iter().product();
        if (pa - ctx.q * ctx.q * pb).norm() > 1e-10 * pa.norm() {
            return Err(QError::Domain("parameters are not balanced: ∏a ≠ q²∏b".into()));
        }
        for i in 0..self.a.len() {
            for j in i + 1..self.a.len() {
                if on_q_lattice(self.a[i] / self.a[j], 1e-6, ctx).is_some() {
                    return Err(QError::Domain(format!("a_{} / a_{} lies on q^Z", i + 1, j + 1)));
                }
            }
        }
        Ok(())
    }
}

/// The integer m with r = q^m, within relative tolerance `tol`.
pub(crate) fn on_q_lattice(r: C64, tol: f64, ctx: &QContext) -> Option<i64> {
    if r.norm() == 0.0 || !r.norm().is_finite() {
        return None;
    }
    let guess = (r.norm().ln() / ctx.q.norm().ln()).round() as i64;
    (guess - 1..=guess + 1).find(|&m| (r / ctx.qn(m) - ONE).norm() < tol)
}

/// Parameters of the Jordan–Pochhammer integrand
/// t^{α−1} (Axt)_∞/(Bxt)_∞ ∏_{i=2}^{M+3} (a_i t)_∞/(b_i t)_∞ anchored at τ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JPParams {
    /// q^α.
    pub alpha_power: C64,
    #[serde(rename = "A")]
    pub big_a: C64,
    #[serde(rename = "B")]
    pub big_b: C64,
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    pub tau: C64,
    /// τ^{α−1}; principal at construction, carried exactly under lattice moves.
    pub tau_power: C64,
}

impl JPParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(alpha: C64, big_a: C64, big_b: C64, a: Vec<C64>, b: Vec<C64>, tau: C64, ctx: &QContext) -> Self {
        JPParams {
            alpha_power: ctx.qpow(alpha),
            big_a,
            big_b,
            a,
            b,
            tau,
            tau_power: ((alpha - 1.0) * tau.ln()).exp(),
        }
    }
}

/// ∏_i ∏_k (1 − num_k t qⁱ)/(1 − den_k t qⁱ), interleaved so that large t
/// never overflows; exact zero on a vanishing numerator factor.
pub fn psi_ratio(num: &[C64], den: &[C64], t: C64, ctx: &QContext) -> QResult<C64> {
    let mut xs: Vec<C64> = num.iter().map(|&c| c * t).collect();
    let mut ys: Vec<C64> = den.iter().map(|&c| c * t).collect();
    let cap = ctx.infinite_product_cutoff + (t.norm().max(1.0).ln() / -ctx.q.norm().ln()) as usize;
    let mut p = ONE;
    for _ in 0..cap {
        let big = xs.iter().chain(&ys).map(|z| z.norm()).fold(0.0, f64::max);
        if big < PRODUCT_EPS {
            break;
        }
        if xs.iter().any(|x| (ONE - *x).norm() < ZERO_FACTOR_TOL) {
            return Ok(ZERO);
        }
        if ys.iter().any(|y| (ONE - *y).norm() < POLE_TOL) {
            return Err(QError::PoleHit(t));
        }
        // Pair numerator and denominator factors so each ratio stays O(1).
        let mut f = ONE;
        for k in 0..xs.len().max(ys.len()) {
            let g = xs.get(k).map_or(ONE, |x| ONE - *x);
            let h = ys.get(k).map_or(ONE, |y| ONE - *y);
            f *= g / h;
        }
        xs.iter_mut().chain(ys.iter_mut()).for_each(|z| *z *= ctx.q);
        p *= f;
    }
    Ok(p)
}

/// A lattice sum together with the number of lattice points evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeSum {
    pub value: C64,
    pub points: usize,
}

/// Sums g(n) for n = 0, 1, 2, … (step +1) or n = −1, −2, … (step −1) until
/// stall_window consecutive terms are negligible against the partial sum.
fn lattice_side(g: &mut dyn FnMut(i64) -> QResult<C64>, step: i64, ctx: &QContext) -> QResult<LatticeSum> {
    let cap = ctx.series_shell_cap;
    let mut total = ZERO;
    let mut quiet = 0;
    let mut n = if step > 0 { 0 } else { -1 };
    for k in 0..cap {
        let term = g(n)?;
        if !(term.re.is_finite() && term.im.is_finite()) {
            return Err(QError::NonFinite(format!("Jackson summand at lattice index {n}")));
        }
        total += term;
        if term.norm() <= ctx.rel_tol * total.norm() {
            quiet += 1;
            if quiet >= ctx.stall_window {
                return Ok(LatticeSum { value: total, points: k + 1 });
            }
        } else {
            quiet = 0;
        }
        n += step;
    }
    Err(QError::NoConvergence(format!("Jackson sum did not settle within {cap} lattice points (step {step})")))
}

/// (1−q)·(pos + neg), the common wrapper of the lattice sums.
fn scaled(sides: &[LatticeSum], ctx: &QContext) -> LatticeSum {
    LatticeSum {
        value: (ONE - ctx.q) * sides.iter().map(|s| s.value).sum::<C64>(),
        points: sides.iter().map(|s| s.points).sum(),
    }
}

/// ∫_0^τ f(t) d_qt = (1−q) Σ_{n≥0} f(τqⁿ) τqⁿ.
pub fn jackson_0_to(tau: C64, f: &dyn Fn(C64) -> QResult<C64>, ctx: &QContext) -> QResult<C64> {
    Ok(jackson_0_to_sum(tau, f, ctx)?.value)
}

fn jackson_0_to_sum(tau: C64, f: &dyn Fn(C64) -> QResult<C64>, ctx: &QContext) -> QResult<LatticeSum> {
    let mut g = |n: i64| {
        let t = tau * ctx.qn(n);
        Ok(f(t)? * t)
    };
    Ok(scaled(&[lattice_side(&mut g, 1, ctx)?], ctx))
}

/// ∫_0^{τ∞} f(t) d_qt = (1−q) Σ_{n∈Z} f(τqⁿ) τqⁿ.
pub fn jackson_bilateral(tau: C64, f: &dyn Fn(C64) -> QResult<C64>, ctx: &QContext) -> QResult<C64> {
    let mut g = |n: i64| {
        let t = tau * ctx.qn(n);
        Ok(f(t)? * t)
    };
    Ok(scaled(&[lattice_side(&mut g, 1, ctx)?, lattice_side(&mut g, -1, ctx)?], ctx).value)
}

/// ∫_{τ1}^{τ2} f(t) d_qt = ∫_0^{τ2} − ∫_0^{τ1}.
pub fn jackson_between(tau1: C64, tau2: C64, f: &dyn Fn(C64) -> QResult<C64>, ctx: &QContext) -> QResult<C64> {
    Ok(jackson_between_sum(tau1, tau2, f, ctx)?.value)
}

fn jackson_between_sum(tau1: C64, tau2: C64, f: &dyn Fn(C64) -> QResult<C64>, ctx: &QContext) -> QResult<LatticeSum> {
    if tau1 == tau2 {
        return Ok(LatticeSum { value: ZERO, points: 0 });
    }
    let (hi, lo) = (jackson_0_to_sum(tau2, f, ctx)?, jackson_0_to_sum(tau1, f, ctx)?);
    Ok(LatticeSum { value: hi.value - lo.value, points: hi.points + lo.points })
}

/// The closure t ↦ ψ(t) = ∏_k (a_k t)_∞/(b_k t)_∞.
pub fn rp_integrand(bp: &BalancedParams, ctx: &QContext) -> impl Fn(C64) -> QResult<C64> + Send + Sync {
    let (a, b, ctx) = (bp.a.clone(), bp.b.clone(), *ctx);
    move |t| psi_ratio(&a, &b, t, &ctx)
}

/// φ_{i,j} = ∫_{q/a_i}^{q/a_j} ψ(t) d_qt with 1-based i, j. The anchors make
/// ψ vanish on the negative half-lattice, so both ends are one-sided.
pub fn rp_integral(bp: &BalancedParams, i: usize, j: usize, ctx: &QContext) -> QResult<C64> {
    Ok(rp_integral_sum(bp, i, j, ctx)?.value)
}

/// φ_{i,j} with the number of lattice points used.
pub fn rp_integral_sum(bp: &BalancedParams, i: usize, j: usize, ctx: &QContext) -> QResult<LatticeSum> {
    bp.check_shape()?;
    let n = bp.a.len();
    if i == 0 || j == 0 || i > n || j > n {
        return Err(QError::Index(format!("endpoint indices must lie in 1..={n}, got ({i}, {j})")));
    }
    if i == j {
        return Ok(LatticeSum { value: ZERO, points: 0 });
    }
    let psi = rp_integrand(bp, ctx);
    jackson_between_sum(ctx.q / bp.a[i - 1], ctx.q / bp.a[j - 1], &psi, ctx)
}

/// ∫_0^{τ∞} t^{α−1} (Axt)_∞/(Bxt)_∞ ∏ (a_i t)_∞/(b_i t)_∞ d_qt.
pub fn jp_integral(p: &JPParams, x: C64, ctx: &QContext) -> QResult<C64> {
    Ok(jp_integral_sum(p, x, ctx)?.value)
}

/// The Jordan–Pochhammer integral with the number of lattice points used.
pub fn jp_integral_sum(p: &JPParams, x: C64, ctx: &QContext) -> QResult<LatticeSum> {
    let mut num = vec![p.big_a * x];
    num.extend_from_slice(&p.a);
    let mut den = vec![p.big_b * x];
    den.extend_from_slice(&p.b);
    let anchored = num.iter().any(|&c| on_q_lattice(c * p.tau, TERMINATING_LATTICE_TOL, ctx).is_some());
    if p.alpha_power.norm() >= 1.0 {
        return Err(QError::Domain(format!("Jordan–Pochhammer integral needs |q^α| < 1, got {}", p.alpha_power.norm())));
    }
    if !anchored {
        let tail = num.iter().product::<C64>() / (p.alpha_power * den.iter().product::<C64>());
        if tail.norm() >= 1.0 {
            return Err(QError::Domain(format!(
                "Jordan–Pochhammer integral diverges as t → ∞: |q^-α A∏a/(B∏b)| = {}",
                tail.norm()
            )));
        }
    }
    // t^{α−1}·t at τqⁿ is τ^{α−1}·τ·(q^α)ⁿ.
    let weight = p.tau_power * p.tau;
    let mut g = |n: i64| {
        let t = p.tau * ctx.qn(n);
        let psi = psi_ratio(&num, &den, t, ctx)?;
        if psi == ZERO {
            return Ok(ZERO);
        }
        Ok(weight * p.alpha_power.powi(n as i32) * psi)
    };
    Ok(scaled(&[lattice_side(&mut g, 1, ctx)?, lattice_side(&mut g, -1, ctx)?], ctx))
}

/// ∫_0^{q/a_j} t^λ ∏_{i≤M+1} (a_i t)_∞/(b_i t)_∞ d_qt with 1-based j, using
/// the carried power (q/a_j)^λ.
pub fn degene_integral(j: usize, p: &DegeneParams, ctx: &QContext) -> QResult<C64> {
    let n = p.a.len();
    if j == 0 || j > n {
        return Err(QError::Index(format!("anchor index must lie in 1..={n}, got {j}")));
    }
    let step = p.qlambda * ctx.q;
    if step.norm() >= 1.0 {
        return Err(QError::Domain(format!("degenerate integral needs |q^(λ+1)| < 1, got {}", step.norm())));
    }
    let tau = ctx.q / p.a[j - 1];
    let weight = p.tau_powers[j - 1] * tau;
    let mut g = |k: i64| Ok(weight * step.powi(k as i32) * psi_ratio(&p.a, &p.b, tau * ctx.qn(k), ctx)?);
    Ok(scaled(&[lattice_side(&mut g, 1, ctx)?], ctx).value)
}
