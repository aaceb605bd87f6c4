//! Shift operators on a named parameter lattice, the q-difference systems
//! built from them, and residual measurement on lattice functions.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{QError, QResult};
use crate::qcore::{elem_sym, C64, ONE, ZERO};

/// A parameter point: names such as a1, b3, x, x2, B1, A, C mapped to values.
pub type Point = BTreeMap<String, C64>;
/// Integer exponents of the elementary shifts; absent names mean 0.
pub type Shift = BTreeMap<String, i64>;
pub type Coeff = Arc<dyn Fn(&Point) -> C64 + Send + Sync>;

pub fn a(i: usize) -> String {
    format!("a{i}")
}

pub fn b(i: usize) -> String {
    format!("b{i}")
}

pub fn x(i: usize) -> String {
    format!("x{i}")
}

/// Value of a named parameter; a missing name is a programming error.
pub fn get(p: &Point, name: &str) -> C64 {
    *p.get(name).unwrap_or_else(|| panic!("parameter {name} missing from point"))
}

pub fn shift_of(pairs: &[(&str, i64)]) -> Shift {
    let mut s = Shift::new();
    for &(n, k) in pairs {
        *s.entry(n.to_string()).or_insert(0) += k;
    }
    s.retain(|_, k| *k != 0);
    s
}

pub fn compose(s1: &Shift, s2: &Shift) -> Shift {
    let mut r = s1.clone();
    for (n, k) in s2 {
        *r.entry(n.clone()).or_insert(0) += k;
    }
    r.retain(|_, k| *k != 0);
    r
}

/// The point with every named parameter multiplied by q^{shift}.
pub fn shift_point(p: &Point, s: &Shift, q: C64) -> Point {
    let mut r = p.clone();
    for (n, &k) in s {
        let v = r.get_mut(n).unwrap_or_else(|| panic!("shift names unknown parameter {n}"));
        *v *= q.powi(k as i32);
    }
    r
}

#[derive(Clone)]
pub struct ShiftTerm {
    pub coeff: Coeff,
    pub shifts: Shift,
}

/// Σ c_i(p)·T^{s_i}; terms with equal shift signatures are merged.
#[derive(Clone)]
pub struct ShiftOperator {
    pub q: C64,
    pub terms: Vec<ShiftTerm>,
}

impl fmt::Debug for ShiftOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.terms.iter().map(|t| &t.shifts)).finish()
    }
}

impl ShiftOperator {
    pub fn zero(q: C64) -> Self {
        ShiftOperator { q, terms: Vec::new() }
    }

    pub fn constant(q: C64, c: C64) -> Self {
        Self::monomial(q, Arc::new(move |_| c), Shift::new())
    }

    pub fn coefficient(q: C64, f: impl Fn(&Point) -> C64 + Send + Sync + 'static) -> Self {
        Self::monomial(q, Arc::new(f), Shift::new())
    }

    pub fn identity(q: C64) -> Self {
        Self::constant(q, ONE)
    }

    /// A pure shift T^{s}.
    pub fn shift(q: C64, pairs: &[(&str, i64)]) -> Self {
        Self::monomial(q, Arc::new(|_| ONE), shift_of(pairs))
    }

    pub fn monomial(q: C64, coeff: Coeff, shifts: Shift) -> Self {
        ShiftOperator { q, terms: vec![ShiftTerm { coeff, shifts }] }
    }

    /// Left multiplication by a coefficient function.
    pub fn scaled(&self, f: impl Fn(&Point) -> C64 + Send + Sync + 'static) -> Self {
        op_multiply(&Self::coefficient(self.q, f), self)
    }

    pub fn scaled_by(&self, c: C64) -> Self {
        op_multiply(&Self::constant(self.q, c), self)
    }

    /// Merges terms whose signatures coincide exactly.
    pub fn normalized(self) -> Self {
        let mut groups: BTreeMap<Shift, Vec<Coeff>> = BTreeMap::new();
        for t in self.terms {
            groups.entry(t.shifts).or_default().push(t.coeff);
        }
        let terms = groups
            .into_iter()
            .map(|(shifts, cs)| {
                let coeff: Coeff = if cs.len() == 1 {
                    cs.into_iter().next().unwrap()
                } else {
                    Arc::new(move |p: &Point| cs.iter().map(|c| c(p)).sum())
                };
                ShiftTerm { coeff, shifts }
            })
            .collect();
        ShiftOperator { q: self.q, terms }
    }

    /// The merged coefficient of every shift signature at a point.
    pub fn coefficients_at(&self, p: &Point) -> BTreeMap<Shift, C64> {
        let mut out: BTreeMap<Shift, C64> = BTreeMap::new();
        for t in &self.terms {
            *out.entry(t.shifts.clone()).or_insert(ZERO) += (t.coeff)(p);
        }
        out
    }
}

impl Add for ShiftOperator {
    type Output = ShiftOperator;
    fn add(mut self, rhs: ShiftOperator) -> ShiftOperator {
        self.terms.extend(rhs.terms);
        self.normalized()
    }
}

impl Neg for ShiftOperator {
    type Output = ShiftOperator;
    fn neg(self) -> ShiftOperator {
        self.scaled_by(-ONE)
    }
}

impl Sub for ShiftOperator {
    type Output = ShiftOperator;
    fn sub(self, rhs: ShiftOperator) -> ShiftOperator {
        self + (-rhs)
    }
}

impl Mul for &ShiftOperator {
    type Output = ShiftOperator;
    fn mul(self, rhs: &ShiftOperator) -> ShiftOperator {
        op_multiply(self, rhs)
    }
}

/// (c₁·S₁)(c₂·S₂) = (c₁·(c₂∘S₁))·S₁S₂, summed over term pairs and merged.
pub fn op_multiply(p: &ShiftOperator, r: &ShiftOperator) -> ShiftOperator {
    let q = p.q;
    let mut terms = Vec::with_capacity(p.terms.len() * r.terms.len());
    for t1 in &p.terms {
        for t2 in &r.terms {
            let (c1, c2, s1) = (t1.coeff.clone(), t2.coeff.clone(), t1.shifts.clone());
            let coeff: Coeff = if s1.is_empty() {
                Arc::new(move |pt: &Point| c1(pt) * c2(pt))
            } else {
                Arc::new(move |pt: &Point| c1(pt) * c2(&shift_point(pt, &s1, q)))
            };
            terms.push(ShiftTerm { coeff, shifts: compose(&t1.shifts, &t2.shifts) });
        }
    }
    ShiftOperator { q, terms }.normalized()
}

/// A function on the lattice base·q^{Z^n}, evaluated by integer offsets so
/// that fractional powers can follow exact q-power steps.
#[derive(Clone)]
pub struct LatticeFunction {
    pub base: Point,
    pub eval: Arc<dyn Fn(&Shift) -> QResult<C64> + Send + Sync>,
}

impl LatticeFunction {
    pub fn new(base: Point, eval: impl Fn(&Shift) -> QResult<C64> + Send + Sync + 'static) -> Self {
        LatticeFunction { base, eval: Arc::new(eval) }
    }

    /// A function of the point alone (no branch bookkeeping needed).
    pub fn from_point(base: Point, q: C64, f: impl Fn(&Point) -> QResult<C64> + Send + Sync + 'static) -> Self {
        let b2 = base.clone();
        Self::new(base, move |s| f(&shift_point(&b2, s, q)))
    }

    pub fn at(&self, offset: &Shift) -> QResult<C64> {
        let v = (self.eval)(offset)?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(QError::NonFinite(format!("lattice function at offset {offset:?}")));
        }
        Ok(v)
    }
}

/// op f at an offset together with the scale Σ|coeff·f(shifted)|.
pub fn op_apply_scaled(op: &ShiftOperator, f: &LatticeFunction, offset: &Shift) -> QResult<(C64, f64)> {
    let p = shift_point(&f.base, offset, op.q);
    let mut sum = ZERO;
    let mut scale = 0.0;
    for t in &op.terms {
        let c = (t.coeff)(&p);
        if c == ZERO {
            continue;
        }
        let v = c * f.at(&compose(offset, &t.shifts))?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(QError::NonFinite(format!("operator term with shift {:?}", t.shifts)));
        }
        sum += v;
        scale += v.norm();
    }
    Ok((sum, scale))
}

/// Σ_terms coeff(point at offset)·f(offset + shifts).
pub fn op_apply(op: &ShiftOperator, f: &LatticeFunction, offset: &Shift) -> QResult<C64> {
    Ok(op_apply_scaled(op, f, offset)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub raw: f64,
    pub relative: f64,
}

/// max |op f| over the offsets, raw and relative to max Σ|coeff·f|.
pub fn residual(op: &ShiftOperator, f: &LatticeFunction, offsets: &[Shift]) -> QResult<Residual> {
    if offsets.is_empty() {
        return Err(QError::Domain("residual needs at least one offset".into()));
    }
    let (mut raw, mut scale) = (0.0f64, 0.0f64);
    for o in offsets {
        let (s, m) = op_apply_scaled(op, f, o)?;
        raw = raw.max(s.norm());
        scale = scale.max(m);
    }
    let relative = if raw == 0.0 { 0.0 } else { raw / scale };
    Ok(Residual { raw, relative })
}

fn cst(q: C64, c: C64) -> ShiftOperator {
    ShiftOperator::constant(q, c)
}

fn cf(q: C64, f: impl Fn(&Point) -> C64 + Send + Sync + 'static) -> ShiftOperator {
    ShiftOperator::coefficient(q, f)
}

fn sh(q: C64, pairs: &[(&str, i64)]) -> ShiftOperator {
    ShiftOperator::shift(q, pairs)
}

fn sh_c(q: C64, pairs: &[(&str, i64)], f: impl Fn(&Point) -> C64 + Send + Sync + 'static) -> ShiftOperator {
    ShiftOperator::monomial(q, Arc::new(f), shift_of(pairs))
}

fn product(q: C64, factors: impl IntoIterator<Item = ShiftOperator>) -> ShiftOperator {
    factors.into_iter().fold(ShiftOperator::identity(q), |acc, f| &acc * &f)
}

/// ∏_{i=0}^{n} (c0 − c1(i)·T) for a joint shift T; empty (identity) for n < 0.
fn poly_t(q: C64, t: &[(&str, i64)], n: i64, c0: C64, c1: impl Fn(i64) -> C64) -> ShiftOperator {
    product(q, (0..=n).map(|i| cst(q, c0) - sh(q, t).scaled_by(c1(i))))
}

/// ∏_{i=0}^{n} (1 − (a1 qⁱ/b1)·T), T = T_{a1}T_{b1}.
fn prod_ratio_t(q: C64, n: i64) -> ShiftOperator {
    let t = [("a1", 1), ("b1", 1)];
    product(
        q,
        (0..=n).map(|i| {
            cst(q, ONE) - sh_c(q, &t, move |p| get(p, "a1") * q.powi(i as i32) / get(p, "b1"))
        }),
    )
}

fn values(p: &Point, names: &[String]) -> Vec<C64> {
    names.iter().map(|n| get(p, n)).collect()
}

/// E_M in the variable x for fixed A, B, a_2..a_{M+3}, b_2..b_{M+3}.
pub fn build_em(m: usize, big_a: C64, big_b: C64, a_hat: &[C64], b_hat: &[C64], q: C64) -> ShiftOperator {
    let mi = m as i64;
    let tx = [("x", 1)];
    let txi = [("x", -1)];
    let pa = |n: i64| poly_t(q, &tx, n, big_b, move |i| big_a * q.powi(i as i32));
    let pb = |n: i64| poly_t(q, &tx, n, ONE, move |i| q.powi(-i as i32));
    let mut op = (&sh(q, &txi) * &pa(mi)).scaled(move |p| get(p, "x").powi(mi as i32 + 2));
    for k in 1..=m + 1 {
        let (ea, eb) = (elem_sym(k, a_hat), elem_sym(k, b_hat));
        let inner = sh(q, &txi).scaled_by(ea) - cst(q, q * eb);
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        let pw = (m + 2 - k) as i32;
        op = op + (&(&inner * &pa(mi - k as i64)) * &pb(k as i64 - 2)).scaled(move |p| sign * get(p, "x").powi(pw));
    }
    let last = if m % 2 == 1 { -1.0 } else { 1.0 } * a_hat.iter().product::<C64>() / big_b;
    op + (&sh(q, &txi) * &pb(mi)).scaled_by(last)
}

/// The Jordan–Pochhammer operator for t^{α−1}(Axt)_∞/(Bxt)_∞∏(a_i t)_∞/(b_i t)_∞.
pub fn build_jp_general(
    m: usize,
    big_a: C64,
    big_b: C64,
    a_hat: &[C64],
    b_hat: &[C64],
    alpha_power: C64,
    q: C64,
) -> ShiftOperator {
    let mi = m as i64;
    let tx = [("x", 1)];
    let txi = [("x", -1)];
    let pa = |n: i64| poly_t(q, &tx, n, big_b, move |i| big_a * q.powi(i as i32));
    let pb = |n: i64| poly_t(q, &tx, n, ONE, move |i| q.powi(-i as i32));
    let mut op = ShiftOperator::zero(q);
    for k in 0..=m + 2 {
        let (ea, eb) = (elem_sym(k, a_hat), elem_sym(k, b_hat));
        let inner = sh(q, &txi).scaled_by(ea) - cst(q, alpha_power * eb);
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        let pw = (m + 2 - k) as i32;
        op = op + (&(&inner * &pa(mi + 1 - k as i64)) * &pb(k as i64 - 1)).scaled(move |p| sign * get(p, "x").powi(pw));
    }
    op
}

/// (B − Aq⁻¹T_x)(1 − q^{−1−M}T_x)·E_M.
pub fn build_jp_factorization(m: usize, big_a: C64, big_b: C64, a_hat: &[C64], b_hat: &[C64], q: C64) -> ShiftOperator {
    let tx = [("x", 1)];
    let left = cst(q, big_b) - sh(q, &tx).scaled_by(big_a / q);
    let mid = cst(q, ONE) - sh(q, &tx).scaled_by(q.powi(-1 - m as i32));
    &(&left * &mid) * &build_em(m, big_a, big_b, a_hat, b_hat, q)
}

/// Ê_M in the joint shift T = T_{a1}T_{b1}, coefficients read from the point.
pub fn build_em_hat(m: usize, q: C64) -> ShiftOperator {
    let mi = m as i64;
    let t = [("a1", 1), ("b1", 1)];
    let ti = [("a1", -1), ("b1", -1)];
    let pb = |n: i64| poly_t(q, &t, n, ONE, move |i| q.powi(-i as i32));
    let ah: Vec<String> = (2..=m + 3).map(a).collect();
    let bh: Vec<String> = (2..=m + 3).map(b).collect();
    let mut op = (&sh(q, &ti) * &prod_ratio_t(q, mi)).scaled(move |p| get(p, "b1").powi(mi as i32 + 2));
    for k in 1..=m + 1 {
        let (ah1, bh1) = (ah.clone(), bh.clone());
        let inner = sh_c(q, &ti, move |p| elem_sym(k, &values(p, &ah1))) - cf(q, move |p| q * elem_sym(k, &values(p, &bh1)));
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        let pw = (m + 2 - k) as i32;
        op = op
            + (&(&inner * &prod_ratio_t(q, mi - k as i64)) * &pb(k as i64 - 2))
                .scaled(move |p| sign * get(p, "b1").powi(pw));
    }
    let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
    op + (&sh(q, &ti) * &pb(mi)).scaled(move |p| sign * values(p, &ah).iter().product::<C64>())
}

/// The first degeneration Ê'_M on a_1..a_{M+2}, b_1..b_{M+2}.
pub fn build_em_hat_prime(m: usize, qlambda: C64, q: C64) -> ShiftOperator {
    let mi = m as i64;
    let t = [("a1", 1), ("b1", 1)];
    let ti = [("a1", -1), ("b1", -1)];
    let pb = |n: i64| poly_t(q, &t, n, ONE, move |i| q.powi(-i as i32));
    let ah: Vec<String> = (2..=m + 2).map(a).collect();
    let bh: Vec<String> = (2..=m + 2).map(b).collect();
    let mut op = ShiftOperator::zero(q);
    for k in 1..=m + 1 {
        let (ah1, bh1) = (ah.clone(), bh.clone());
        let inner = sh_c(q, &ti, move |p| elem_sym(k - 1, &values(p, &ah1)))
            - cf(q, move |p| qlambda * q * elem_sym(k - 1, &values(p, &bh1)));
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        let pw = (m + 2 - k) as i32;
        op = op
            + (&(&inner * &prod_ratio_t(q, mi - k as i64)) * &pb(k as i64 - 2))
                .scaled(move |p| sign * get(p, "b1").powi(pw));
    }
    let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
    op + (&sh(q, &ti) * &pb(mi)).scaled(move |p| sign * values(p, &ah).iter().product::<C64>())
}

/// Ê''_M on a_1..a_{M+1}, b_1..b_{M+1}.
pub fn build_em_hat_second(m: usize, qlambda: C64, q: C64) -> ShiftOperator {
    let mi = m as i64;
    let t = [("a1", 1), ("b1", 1)];
    let ti = [("a1", -1), ("b1", -1)];
    let pb = |n: i64| poly_t(q, &t, n, ONE, move |i| q.powi(-i as i32));
    let ah: Vec<String> = (2..=m + 1).map(a).collect();
    let bh: Vec<String> = (2..=m + 1).map(b).collect();
    let mut op = ShiftOperator::zero(q);
    for k in 1..=m + 1 {
        let (ah1, bh1) = (ah.clone(), bh.clone());
        let inner = sh_c(q, &ti, move |p| elem_sym(k - 1, &values(p, &ah1)))
            - cf(q, move |p| qlambda * q * elem_sym(k - 1, &values(p, &bh1)));
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        let pw = (m + 1 - k) as i32;
        op = op
            + (&(&inner * &prod_ratio_t(q, mi - k as i64)) * &pb(k as i64 - 2))
                .scaled(move |p| sign * get(p, "b1").powi(pw));
    }
    op
}

fn term3(
    q: C64,
    parts: [(Vec<(String, i64)>, Arc<dyn Fn(&Point) -> C64 + Send + Sync>); 3],
) -> ShiftOperator {
    let mut op = ShiftOperator::zero(q);
    for (s, c) in parts {
        let shifts: Shift = s.into_iter().filter(|(_, k)| *k != 0).collect();
        op = op + ShiftOperator::monomial(q, c, shifts);
    }
    op
}

macro_rules! coeff {
    (|$p:ident| $e:expr) => {
        Arc::new(move |$p: &Point| $e) as Arc<dyn Fn(&Point) -> C64 + Send + Sync>
    };
}

/// The three-term relations of kind 1..6 for 2 ≤ k ≠ l ≤ n_params, where
/// n_params = M+3 for q-RP^M.
pub fn build_three_term(kind: usize, k: usize, l: usize, n_params: usize, q: C64) -> QResult<ShiftOperator> {
    let uses_l = matches!(kind, 1 | 3 | 5 | 6);
    if !(2..=n_params).contains(&k) || (uses_l && (!(2..=n_params).contains(&l) || k == l)) {
        return Err(QError::Index(format!("three-term relation needs 2 ≤ k ≠ l ≤ {n_params}, got k={k}, l={l}")));
    }
    let (ak, al, bk, bl) = (a(k), a(l), b(k), b(l));
    let (a1, b1) = ("a1".to_string(), "b1".to_string());
    let v = |names: &[(&String, i64)]| names.iter().map(|(n, s)| ((*n).clone(), *s)).collect::<Vec<_>>();
    let op = match kind {
        1 => {
            let (x1, x2, x3, x4) = (ak.clone(), al.clone(), ak.clone(), al.clone());
            term3(
                q,
                [
                    (v(&[(&ak, 1), (&al, -1)]), coeff!(|p| get(p, "a1") - get(p, &x1) * q)),
                    (v(&[(&ak, 1), (&a1, -1)]), coeff!(|p| -(get(p, &x2) - get(p, &x3) * q))),
                    (vec![], coeff!(|p| get(p, &x4) - get(p, "a1"))),
                ],
            )
        }
        2 => {
            let (x1, x2) = (ak.clone(), ak.clone());
            term3(
                q,
                [
                    (v(&[(&a1, 1), (&ak, -1)]), coeff!(|p| get(p, "b1") - get(p, "a1"))),
                    (v(&[(&a1, 1), (&b1, 1)]), coeff!(|p| -(get(p, &x1) / q - get(p, "a1")))),
                    (vec![], coeff!(|p| get(p, &x2) / q - get(p, "b1"))),
                ],
            )
        }
        3 => {
            let (x1, x2, x3, x4) = (bl.clone(), bk.clone(), bl.clone(), bk.clone());
            term3(
                q,
                [
                    (v(&[(&bk, 1), (&bl, -1)]), coeff!(|p| get(p, "b1") - get(p, &x1) / q)),
                    (v(&[(&b1, 1), (&bl, -1)]), coeff!(|p| -(get(p, &x2) - get(p, &x3) / q))),
                    (vec![], coeff!(|p| get(p, &x4) - get(p, "b1"))),
                ],
            )
        }
        4 => {
            let (x1, x2) = (bk.clone(), bk.clone());
            term3(
                q,
                [
                    (v(&[(&bk, 1), (&b1, -1)]), coeff!(|p| get(p, "a1") - get(p, "b1"))),
                    (v(&[(&a1, -1), (&b1, -1)]), coeff!(|p| -(get(p, &x1) * q - get(p, "b1")))),
                    (vec![], coeff!(|p| get(p, &x2) * q - get(p, "a1"))),
                ],
            )
        }
        5 => {
            let (x1, x2, x3, x4) = (ak.clone(), bl.clone(), ak.clone(), bl.clone());
            term3(
                q,
                [
                    (v(&[(&ak, 1), (&bl, 1)]), coeff!(|p| get(p, "b1") - get(p, &x1))),
                    (v(&[(&ak, 1), (&b1, 1)]), coeff!(|p| -(get(p, &x2) - get(p, &x3)))),
                    (vec![], coeff!(|p| get(p, &x4) - get(p, "b1"))),
                ],
            )
        }
        6 => {
            let (x1, x2, x3, x4) = (bl.clone(), bl.clone(), ak.clone(), ak.clone());
            term3(
                q,
                [
                    (v(&[(&ak, -1), (&bl, -1)]), coeff!(|p| get(p, &x1) - get(p, "a1"))),
                    (v(&[(&a1, -1), (&bl, -1)]), coeff!(|p| -(get(p, &x2) - get(p, &x3)))),
                    (vec![], coeff!(|p| get(p, "a1") - get(p, &x4))),
                ],
            )
        }
        _ => return Err(QError::Index(format!("three-term relation kind must be 1..=6, got {kind}"))),
    };
    Ok(op)
}

/// (factor·∏_{k=1}^{n} T_{a_k}T_{b_k} − 1).
pub fn build_scaling(n_params: usize, factor: C64, q: C64) -> ShiftOperator {
    let names: Vec<String> = (1..=n_params).flat_map(|k| [a(k), b(k)]).collect();
    let pairs: Vec<(&str, i64)> = names.iter().map(|s| (s.as_str(), 1)).collect();
    sh(q, &pairs).scaled_by(factor) - cst(q, ONE)
}

/// (q∏_{k=1}^{M+3} T_{a_k}T_{b_k} − 1).
pub fn build_scaling_relation(m: usize, q: C64) -> ShiftOperator {
    build_scaling(m + 3, q, q)
}

/// Every operator of q-RP^M with a label: Ê_M, the six three-term kinds for
/// all 2 ≤ k ≠ l ≤ M+3, and the scaling relation.
pub fn build_rp_system(m: usize, q: C64) -> Vec<(String, ShiftOperator)> {
    let mut ops = vec![("E_hat".to_string(), build_em_hat(m, q))];
    for kind in 1..=6 {
        for k in 2..=m + 3 {
            if matches!(kind, 2 | 4) {
                let op = build_three_term(kind, k, 0, m + 3, q).expect("indices in range");
                ops.push((format!("three{kind}({k})"), op));
                continue;
            }
            for l in (2..=m + 3).filter(|&l| l != k) {
                let op = build_three_term(kind, k, l, m + 3, q).expect("indices in range");
                ops.push((format!("three{kind}({k},{l})"), op));
            }
        }
    }
    ops.push(("scaling".to_string(), build_scaling_relation(m, q)));
    ops
}

/// q-RP^M_degene: Ê''_M, the four three-term relations for 2 ≤ k ≠ l ≤ M+1
/// and the scaling relation with q^{λ+1}.
pub fn build_degene_system(m: usize, qlambda: C64, q: C64) -> Vec<(String, ShiftOperator)> {
    let mut ops = vec![("E_hat2".to_string(), build_em_hat_second(m, qlambda, q))];
    for k in 2..=m + 1 {
        for l in 2..=m + 1 {
            if k == l {
                continue;
            }
            let (ak, al, bk, bl) = (a(k), a(l), b(k), b(l));
            let (a1, b1) = ("a1".to_string(), "b1".to_string());
            let one = |n: &String, s: i64| vec![(n.clone(), s)];
            let (x1, x2, x3, x4) = (ak.clone(), al.clone(), ak.clone(), al.clone());
            ops.push((
                format!("deg1({k},{l})"),
                term3(
                    q,
                    [
                        (one(&al, -1), coeff!(|p| get(p, "a1") - get(p, &x1))),
                        (one(&a1, -1), coeff!(|p| -(get(p, &x2) - get(p, &x3)))),
                        (one(&ak, -1), coeff!(|p| get(p, &x4) - get(p, "a1"))),
                    ],
                ),
            ));
            let (x1, x2, x3, x4) = (bl.clone(), bk.clone(), bl.clone(), bk.clone());
            ops.push((
                format!("deg4({k},{l})"),
                term3(
                    q,
                    [
                        (one(&bk, 1), coeff!(|p| get(p, "b1") - get(p, &x1))),
                        (one(&b1, 1), coeff!(|p| -(get(p, &x2) - get(p, &x3)))),
                        (one(&bl, 1), coeff!(|p| get(p, &x4) - get(p, "b1"))),
                    ],
                ),
            ));
            let (x1, x2, x3, x4) = (ak.clone(), bl.clone(), ak.clone(), bl.clone());
            ops.push((
                format!("deg5({k},{l})"),
                term3(
                    q,
                    [
                        (one(&bl, 1), coeff!(|p| get(p, "b1") - get(p, &x1) / q)),
                        (one(&b1, 1), coeff!(|p| -(get(p, &x2) - get(p, &x3) / q))),
                        (one(&ak, -1), coeff!(|p| get(p, &x4) - get(p, "b1"))),
                    ],
                ),
            ));
            let (x1, x2, x3, x4) = (bl.clone(), bl.clone(), ak.clone(), ak.clone());
            ops.push((
                format!("deg6({k},{l})"),
                term3(
                    q,
                    [
                        (one(&ak, -1), coeff!(|p| q * get(p, &x1) - get(p, "a1"))),
                        (one(&a1, -1), coeff!(|p| -(q * get(p, &x2) - get(p, &x3)))),
                        (one(&bl, 1), coeff!(|p| get(p, "a1") - get(p, &x4))),
                    ],
                ),
            ));
        }
    }
    ops.push(("scaling".to_string(), build_scaling(m + 1, qlambda * q, q)));
    ops
}

/// The q-Appell–Lauricella system in T_{x_1}..T_{x_M}; coefficients read
/// A, B_i, C and x_i from the point.
pub fn build_qal_system(m: usize, q: C64) -> Vec<(String, ShiftOperator)> {
    let one = || cst(q, ONE);
    let ti = |i: usize| {
        let n = x(i);
        sh(q, &[(n.as_str(), 1)])
    };
    let all_names: Vec<String> = (1..=m).map(x).collect();
    let tall = || {
        let pairs: Vec<(&str, i64)> = all_names.iter().map(|s| (s.as_str(), 1)).collect();
        sh(q, &pairs)
    };
    let mut ops = Vec::new();
    for i in 1..=m {
        for j in i + 1..=m {
            let (bi, bj, xi, xj) = (format!("B{i}"), format!("B{j}"), x(i), x(j));
            let t1 = &(one() - ti(j)) * &(one() - ti(i).scaled(move |p| get(p, &bi)));
            let t2 = &(one() - ti(i)) * &(one() - ti(j).scaled(move |p| get(p, &bj)));
            ops.push((format!("qal1({i},{j})"), t1.scaled(move |p| get(p, &xi)) - t2.scaled(move |p| get(p, &xj))));
        }
    }
    for i in 1..=m {
        let (bi, xi) = (format!("B{i}"), x(i));
        let t1 = &(one() - ti(i)) * &(one() - tall().scaled(move |p| get(p, "C") / q));
        let t2 = &(one() - ti(i).scaled(move |p| get(p, &bi))) * &(one() - tall().scaled(|p| get(p, "A")));
        ops.push((format!("qal2({i})"), t1 - t2.scaled(move |p| get(p, &xi))));
    }
    ops
}

/// Casorati matrix [f_i(T^n)] for n = 0..len−1 and its nondegeneracy ratio
/// |det| / ∏ row norms, taken after each column is scaled to unit max-norm
/// so that one large solution cannot make the rows look parallel. `det` and
/// `row_norm_product` refer to the scaled matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Independence {
    pub det: C64,
    pub row_norm_product: f64,
    pub ratio: f64,
    pub independent: bool,
}

/// Threshold below which a Casorati determinant counts as singular.
pub const INDEPENDENCE_THRESHOLD: f64 = 1e-8;

pub fn casorati(columns: &[LatticeFunction], t: &Shift) -> QResult<Independence> {
    let n = columns.len();
    let mut mat = vec![vec![ZERO; n]; n];
    for (r, row) in mat.iter_mut().enumerate() {
        let off: Shift = t.iter().map(|(k, v)| (k.clone(), v * r as i64)).filter(|(_, v)| *v != 0).collect();
        for (c, f) in columns.iter().enumerate() {
            row[c] = f.at(&off)?;
        }
    }
    for c in 0..n {
        let scale = mat.iter().map(|r| r[c].norm()).fold(0.0, f64::max);
        if scale > 0.0 {
            mat.iter_mut().for_each(|r| r[c] /= scale);
        }
    }
    let row_norm_product: f64 = mat.iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).product();
    let det = determinant(mat);
    let ratio = if row_norm_product == 0.0 { 0.0 } else { det.norm() / row_norm_product };
    Ok(Independence { det, row_norm_product, ratio, independent: ratio > INDEPENDENCE_THRESHOLD })
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(mut m: Vec<Vec<C64>>) -> C64 {
    let n = m.len();
    let mut det = ONE;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm())).unwrap();
        if m[piv][col] == ZERO {
            return ZERO;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                let v = m[col][c];
                m[r][c] -= f * v;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const Q: C64 = C64::new(0.5, 0.0);

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn point(pairs: &[(&str, C64)]) -> Point {
        pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
    }

    fn poly(base: Point, cs: Vec<C64>) -> LatticeFunction {
        LatticeFunction::from_point(base, Q, move |p| {
            let x = get(p, "x");
            Ok(cs.iter().enumerate().map(|(k, c)| c * x.powi(k as i32)).sum::<C64>() + cs[0] / (ONE - x))
        })
    }

    #[test]
    fn identity_and_shift_actions() {
        let base = point(&[("x", c(0.3, 0.2))]);
        let f = LatticeFunction::from_point(base.clone(), Q, |p| Ok(get(p, "x")));
        let o = Shift::new();
        assert_eq!(op_apply(&ShiftOperator::identity(Q), &f, &o).unwrap(), c(0.3, 0.2));
        assert_eq!(op_apply(&sh(Q, &[("x", 1)]), &f, &o).unwrap(), Q * c(0.3, 0.2));
        assert_eq!(op_apply(&ShiftOperator::zero(Q), &f, &o).unwrap(), ZERO);
    }

    #[test]
    fn shift_past_coefficient() {
        // T_x·x = (qx)·T_x as actions.
        let base = point(&[("x", c(0.3, 0.2))]);
        let lhs = &sh(Q, &[("x", 1)]) * &cf(Q, |p| get(p, "x"));
        let rhs = sh(Q, &[("x", 1)]).scaled(|p| Q * get(p, "x"));
        for f in [poly(base.clone(), vec![ONE]), poly(base.clone(), vec![ZERO, ONE])] {
            let o = Shift::new();
            assert!((op_apply(&lhs, &f, &o).unwrap() - op_apply(&rhs, &f, &o).unwrap()).norm() < 1e-15);
        }
        let prod = &sh(Q, &[("x", 2)]) * &sh(Q, &[("x", -5), ("y", 1)]);
        assert_eq!(prod.terms.len(), 1);
        assert_eq!(prod.terms[0].shifts, shift_of(&[("x", -3), ("y", 1)]));
    }

    #[test]
    fn merging_cancels_equal_signatures() {
        let op = sh(Q, &[("x", 1)]) - sh(Q, &[("x", 1)]);
        assert_eq!(op.terms.len(), 1);
        let base = point(&[("x", c(0.3, 0.2))]);
        let r = residual(&op, &poly(base, vec![ONE, ONE]), &[Shift::new()]).unwrap();
        assert_eq!(r.relative, 0.0);
    }

    #[test]
    fn one_minus_t_kills_constants() {
        let base = point(&[("x", c(0.3, 0.2))]);
        let f = LatticeFunction::from_point(base, Q, |_| Ok(c(2.0, 1.0)));
        let op = cst(Q, ONE) - sh(Q, &[("x", 1)]);
        assert_eq!(residual(&op, &f, &[Shift::new(), shift_of(&[("x", 2)])]).unwrap().raw, 0.0);
    }

    #[test]
    fn em_for_m1_matches_hand_expansion() {
        // E_1 = x³T⁻¹(B−AT)(B−AqT) − x²(e1(a)T⁻¹ − q e1(b))(B−AT) + x(e2(a)T⁻¹ − q e2(b)) − (a2a3a4/B)T⁻¹(1−T)(1−q⁻¹T).
        let (ba, bb) = (c(0.5, 0.2), c(0.3, -0.4));
        let ah = [c(0.4, 0.3), c(-0.5, 0.2), c(0.6, -0.4)];
        let bh = [c(0.7, 0.1), c(0.3, -0.5), c(0.2, 0.6)];
        let op = build_em(1, ba, bb, &ah, &bh, Q);
        let x0 = c(0.3, 0.0);
        let p = point(&[("x", x0)]);
        let got = op.coefficients_at(&p);
        let (e1a, e2a, e3a) = (elem_sym(1, &ah), elem_sym(2, &ah), elem_sym(3, &ah));
        let (e1b, e2b) = (elem_sym(1, &bh), elem_sym(2, &bh));
        let x3 = x0.powi(3);
        let x2 = x0 * x0;
        let want = [
            (-1, x3 * bb * bb - x2 * e1a * bb + x0 * e2a - e3a / bb),
            (0, -x3 * bb * ba * (ONE + Q) + x2 * (e1a * ba + Q * e1b * bb) - x0 * (e2a + Q * e2b) + e3a / bb * (ONE + ONE / Q)),
            (1, x3 * ba * ba * Q - x2 * Q * e1b * ba + x0 * Q * e2b - e3a / (bb * Q)),
        ];
        for (k, w) in want {
            let key = if k == 0 { Shift::new() } else { shift_of(&[("x", k)]) };
            assert!((got[&key] - w).norm() < 1e-14, "T^{k}: {} vs {w}", got[&key]);
        }
    }

    #[test]
    fn three_term_index_errors() {
        assert!(matches!(build_three_term(1, 2, 2, 4, Q), Err(QError::Index(_))));
        assert!(matches!(build_three_term(1, 1, 3, 4, Q), Err(QError::Index(_))));
        assert!(matches!(build_three_term(7, 2, 3, 4, Q), Err(QError::Index(_))));
        assert!(build_three_term(2, 2, 2, 4, Q).is_ok());
    }

    #[test]
    fn scaling_on_constant() {
        let base: Point = (1..=4).flat_map(|k| [(a(k), c(0.3, 0.1)), (b(k), c(0.4, 0.0))]).collect();
        let f = LatticeFunction::from_point(base, Q, |_| Ok(ONE));
        let v = op_apply(&build_scaling_relation(1, Q), &f, &Shift::new()).unwrap();
        assert!((v - (Q - ONE)).norm() < 1e-15);
    }

    #[test]
    fn qal_system_size() {
        assert_eq!(build_qal_system(3, Q).len(), 3 + 3);
        assert_eq!(build_qal_system(1, Q).len(), 1);
    }

    #[test]
    fn determinant_small_cases() {
        let m = vec![vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(3.0, 0.0), c(4.0, 0.0)]];
        assert!((determinant(m) - c(-2.0, 0.0)).norm() < 1e-15);
        let s = vec![vec![c(1.0, 1.0), c(1.0, 1.0)], vec![c(2.0, 0.0), c(2.0, 0.0)]];
        assert_eq!(determinant(s).norm(), 0.0);
    }

    proptest! {
        #[test]
        fn associativity(x0r in 0.1f64..0.8, x0i in -0.5f64..0.5, c0 in -1.0f64..1.0, c1 in -1.0f64..1.0) {
            let base = point(&[("x", c(x0r, x0i))]);
            let p = cst(Q, c(c0, 0.3)) - sh(Q, &[("x", 1)]).scaled(|p| get(p, "x"));
            let qq = sh(Q, &[("x", -1)]).scaled(move |p| get(p, "x") * c1) + cst(Q, ONE);
            let r = sh(Q, &[("x", 2)]).scaled(|p| get(p, "x").powi(2)) - cst(Q, c(0.0, 1.0));
            let left = &(&p * &qq) * &r;
            let right = &p * &(&qq * &r);
            for k in 0..5 {
                let f = poly(base.clone(), vec![c(1.0 + k as f64, 0.0), c(0.2, k as f64), c(-0.3, 0.1)]);
                let o = shift_of(&[("x", k - 2)]);
                let (u, v) = (op_apply(&left, &f, &o).unwrap(), op_apply(&right, &f, &o).unwrap());
                prop_assert!((u - v).norm() <= 1e-12 * u.norm().max(1.0));
            }
        }

        #[test]
        fn commutation_with_coefficients(x0r in 0.1f64..0.8, s in -3i64..3) {
            let base = point(&[("x", c(x0r, 0.1)), ("a1", c(0.4, 0.2))]);
            let coef = |p: &Point| get(p, "x") * get(p, "a1") + ONE;
            for name in ["x", "a1"] {
                let t = sh(Q, &[(name, s)]);
                let lhs = &t * &cf(Q, coef);
                let rhs = t.scaled(move |p| coef(&shift_point(p, &shift_of(&[(name, s)]), Q)));
                let f = LatticeFunction::from_point(base.clone(), Q, |p| Ok(get(p, "x") + get(p, "a1").powi(2)));
                let o = Shift::new();
                prop_assert_eq!(op_apply(&lhs, &f, &o).unwrap(), op_apply(&rhs, &f, &o).unwrap());
            }
        }

        #[test]
        fn system_shifts_preserve_balance(m in 1usize..=3, seed in 0u64..1000, k in 1usize..=6, l in 1usize..=6, n in -3i64..=3) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut rc = || C64::from_polar(rng.gen_range(0.3..0.9), rng.gen_range(-3.1..3.1));
            let len = m + 3;
            let (k, l) = (1 + (k - 1) % len, 1 + l % len);
            let av: Vec<C64> = (0..len).map(|_| rc()).collect();
            let mut bv: Vec<C64> = (0..len - 1).map(|_| rc()).collect();
            bv.push(av.iter().product::<C64>() / (Q * Q * bv.iter().product::<C64>()));
            let mut p = Point::new();
            for i in 0..len {
                p.insert(a(i + 1), av[i]);
                p.insert(b(i + 1), bv[i]);
            }
            let defect = |p: &Point| {
                let pa: C64 = (1..=len).map(|i| get(p, &a(i))).product();
                let pb: C64 = (1..=len).map(|i| get(p, &b(i))).product();
                (pa - Q * Q * pb).norm() / pa.norm()
            };
            let shifts = [
                shift_of(&[("a1", n), ("b1", n)]),
                shift_of(&[(&a(k), n), (&a(l), -n)]),
                shift_of(&[(&b(k), n), (&b(l), -n)]),
                shift_of(&[(&a(k), n), (&b(l), n)]),
            ];
            for s in &shifts {
                prop_assert!(defect(&shift_point(&p, s, Q)) <= 1e-13, "{:?}", s);
            }
        }

        #[test]
        fn factorization_identity(m in 1usize..=3, seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut rc = || C64::from_polar(rng.gen_range(0.3..0.9), rng.gen_range(-3.1..3.1));
            let (ba, bb) = (rc(), rc());
            let ah: Vec<C64> = (0..m + 2).map(|_| rc()).collect();
            let mut bh: Vec<C64> = (0..m + 1).map(|_| rc()).collect();
            bh.push(ba * ah.iter().product::<C64>() / (Q * Q * bb * bh.iter().product::<C64>()));
            let f = build_jp_factorization(m, ba, bb, &ah, &bh, Q);
            let g = build_jp_general(m, ba, bb, &ah, &bh, Q, Q);
            let base = point(&[("x", rc())]);
            let cs: Vec<C64> = (0..6).map(|_| rc()).collect();
            let lf = poly(base, cs);
            let (u, su) = op_apply_scaled(&f, &lf, &Shift::new()).unwrap();
            let (v, sv) = op_apply_scaled(&g, &lf, &Shift::new()).unwrap();
            prop_assert!((u - v).norm() <= 1e-10 * su.max(sv), "{} vs {}", u, v);
        }
    }
}
