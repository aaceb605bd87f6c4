//! q-Pochhammer symbols, the theta function, elementary symmetric
//! polynomials and the numeric context every evaluator receives.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QError, QResult};

pub type C64 = Complex64;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Products stop once the factor differs from 1 by less than this.
pub const PRODUCT_EPS: f64 = 64.0 * f64::EPSILON;

/// Tolerance for recognising a parameter as an exact q-power.
pub const TERMINATING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QContext {
    pub q: C64,
    pub infinite_product_cutoff: usize,
    /// Cap on series shells and on the lattice points of each Jackson sum.
    pub series_shell_cap: usize,
    /// Truncation tolerance for series shells and lattice sums.
    pub rel_tol: f64,
    pub stall_window: usize,
}

impl Default for QContext {
    fn default() -> Self {
        QContext {
            q: C64::new(0.5, 0.0),
            infinite_product_cutoff: 4000,
            series_shell_cap: 2000,
            rel_tol: 1e-16,
            stall_window: 3,
        }
    }
}

impl QContext {
    pub fn new(q: C64) -> QResult<Self> {
        let ctx = QContext { q, ..Default::default() };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> QResult<()> {
        let r = self.q.norm();
        if !(r > 0.0 && r < 1.0) || !self.q.re.is_finite() || !self.q.im.is_finite() {
            return Err(QError::Config(format!("need 0 < |q| < 1, got |q| = {r}")));
        }
        if !(self.rel_tol > 0.0) {
            return Err(QError::Config("rel_tol must be positive".into()));
        }
        if self.infinite_product_cutoff == 0 || self.series_shell_cap == 0 || self.stall_window == 0 {
            return Err(QError::Config("cutoffs and stall window must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_shell_cap(mut self, cap: usize) -> Self {
        self.series_shell_cap = cap;
        self
    }

    /// q^n for any integer n.
    pub fn qn(&self, n: i64) -> C64 {
        self.q.powi(n as i32)
    }

    /// q^λ by the principal logarithm of q.
    pub fn qpow(&self, lambda: C64) -> C64 {
        (lambda * self.q.ln()).exp()
    }

    /// The n ≥ 0 with a·qⁿ = 1 (within tolerance), if a lies on q^{-Z≥0}.
    pub fn q_power_index(&self, a: C64) -> Option<usize> {
        let r = a.norm();
        if r == 0.0 {
            return None;
        }
        let n = (r.ln() / -self.q.norm().ln()).round();
        if n < 0.0 || n > self.series_shell_cap as f64 {
            return None;
        }
        let n = n as usize;
        ((a * self.qn(n as i64) - ONE).norm() < TERMINATING_TOL).then_some(n)
    }
}

/// (a)_l for any integer l.
pub fn qpoch_finite(a: C64, l: i64, ctx: &QContext) -> QResult<C64> {
    if l >= 0 {
        let mut p = ONE;
        let mut x = a;
        for _ in 0..l {
            p *= ONE - x;
            x *= ctx.q;
        }
        return Ok(p);
    }
    let den = qpoch_finite(a * ctx.qn(l), -l, ctx)?;
    if den.norm() == 0.0 {
        return Err(QError::DivisionByZero(format!("({a})_{l}")));
    }
    Ok(ONE / den)
}

/// (a)_∞, truncated once |a qⁿ| is below 64·eps or at the cutoff.
pub fn qpoch_infinite(a: C64, ctx: &QContext) -> C64 {
    let mut p = ONE;
    let mut x = a;
    for _ in 0..ctx.infinite_product_cutoff {
        if x.norm() < PRODUCT_EPS {
            break;
        }
        p *= ONE - x;
        x *= ctx.q;
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Length {
    Finite(i64),
    Infinite,
}

/// (a_1, …, a_r)_l.
pub fn qpoch_multi(xs: &[C64], l: Length, ctx: &QContext) -> QResult<C64> {
    let mut p = ONE;
    for &a in xs {
        p *= match l {
            Length::Finite(n) => qpoch_finite(a, n, ctx)?,
            Length::Infinite => qpoch_infinite(a, ctx),
        };
    }
    Ok(p)
}

/// Shorthand for a product of infinite Pochhammers.
pub fn pinf(xs: &[C64], ctx: &QContext) -> C64 {
    xs.iter().map(|&a| qpoch_infinite(a, ctx)).product()
}

/// θ(x) = (x, q/x)_∞.
pub fn theta(x: C64, ctx: &QContext) -> QResult<C64> {
    if x.norm() == 0.0 {
        return Err(QError::Domain("theta(0) is undefined".into()));
    }
    Ok(qpoch_infinite(x, ctx) * qpoch_infinite(ctx.q / x, ctx))
}

/// e_k(xs); 1 for k = 0 and 0 for k beyond the length.
pub fn elem_sym(k: usize, xs: &[C64]) -> C64 {
    if k > xs.len() {
        return ZERO;
    }
    let mut e = vec![ZERO; k + 1];
    e[0] = ONE;
    for &x in xs {
        for j in (1..=k).rev() {
            let prev = e[j - 1];
            e[j] += prev * x;
        }
    }
    e[k]
}

/// (a)_n for n = 0, 1, 2, … grown on demand.
#[derive(Debug, Clone)]
pub struct PochTable {
    next: C64,
    q: C64,
    vals: Vec<C64>,
}

impl PochTable {
    pub fn new(a: C64, ctx: &QContext) -> Self {
        PochTable { next: a, q: ctx.q, vals: vec![ONE] }
    }

    pub fn get(&mut self, n: usize) -> C64 {
        while self.vals.len() <= n {
            let last = *self.vals.last().unwrap();
            self.vals.push(last * (ONE - self.next));
            self.next *= self.q;
        }
        self.vals[n]
    }
}

/// A fixed set of Pochhammer tables: `prod(n)` is ∏_k (c_k)_n.
#[derive(Debug, Clone)]
pub struct PochProduct {
    tables: Vec<PochTable>,
}

impl PochProduct {
    pub fn new(cs: &[C64], ctx: &QContext) -> Self {
        PochProduct { tables: cs.iter().map(|&c| PochTable::new(c, ctx)).collect() }
    }

    pub fn prod(&mut self, n: usize) -> C64 {
        self.tables.iter_mut().map(|t| t.get(n)).product()
    }
}

/// q^{binom(n,2)}.
pub fn q_binom2(n: usize, ctx: &QContext) -> C64 {
    let n = n as i64;
    ctx.qn(n * (n - 1) / 2)
}

/// x^λ on the lattice x·q^Z: principal branch at the base point, exact
/// q^λ steps away from it, so shifted evaluations never change branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticePower {
    pub base_value: C64,
    pub step: C64,
}

impl LatticePower {
    pub fn principal(x: C64, lambda: C64, ctx: &QContext) -> Self {
        LatticePower { base_value: (lambda * x.ln()).exp(), step: ctx.qpow(lambda) }
    }

    /// Value at x·q^k.
    pub fn at(&self, k: i64) -> C64 {
        self.base_value * self.step.powi(k as i32)
    }
}
