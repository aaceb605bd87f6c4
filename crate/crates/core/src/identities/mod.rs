//! The identity catalog: every checkable equality of the theory as a named,
//! seeded test case with an admissibility predicate, two evaluated sides or
//! a measurement, and a pass/fail verdict.

mod cases;
mod limit_cases;
mod limits;
mod series_cases;
mod system_cases;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::Range;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{QError, QResult};
use crate::jackson::BalancedParams;
use crate::qcore::{QContext, C64};

pub use cases::{lattice_gap, MIN_GAP};
pub use limit_cases::MIN_RATE;
pub use limits::{geometric_limit, neville_at_zero, Extrapolated};
pub use system_cases::{independence_check, independence_columns, independence_generic, independence_shift, MIN_SEPARATION};

/// Draws rejected before a sampler gives up.
pub const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Equality,
    Residual,
    Limit,
    Independence,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Equality => "equality",
            Kind::Residual => "residual",
            Kind::Limit => "limit",
            Kind::Independence => "independence",
        }
    }
}

/// A parameter point: continuous values by name plus discrete choices.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Sample {
    pub point: BTreeMap<String, C64>,
    pub discrete: BTreeMap<String, i64>,
}

impl Sample {
    pub fn set(&mut self, name: impl Into<String>, v: C64) {
        self.point.insert(name.into(), v);
    }

    pub fn set_int(&mut self, name: impl Into<String>, v: i64) {
        self.discrete.insert(name.into(), v);
    }

    /// Value of a named parameter; a missing name is a catalog bug.
    pub fn get(&self, name: &str) -> C64 {
        *self.point.get(name).unwrap_or_else(|| panic!("sample has no parameter {name}"))
    }

    pub fn int(&self, name: &str) -> i64 {
        *self.discrete.get(name).unwrap_or_else(|| panic!("sample has no discrete parameter {name}"))
    }

    /// prefix1..prefixN.
    pub fn vec(&self, prefix: &str, n: usize) -> Vec<C64> {
        (1..=n).map(|i| self.get(&format!("{prefix}{i}"))).collect()
    }

    pub fn set_vec(&mut self, prefix: &str, vs: &[C64]) {
        for (i, &v) in vs.iter().enumerate() {
            self.set(format!("{prefix}{}", i + 1), v);
        }
    }
}

/// Seeded parameter draws.
pub struct Draw {
    rng: ChaCha8Rng,
    seed: u64,
}

impl Draw {
    pub fn new(id: &str, seed: u64, m: usize) -> Self {
        // FNV-1a of the id keeps streams of different cases apart.
        let mut h: u64 = 0xcbf29ce484222325;
        for b in id.bytes() {
            h = (h ^ b as u64).wrapping_mul(0x100000001b3);
        }
        let mixed = h ^ seed.wrapping_mul(0x9e3779b97f4a7c15) ^ ((m as u64) << 56);
        Draw { rng: ChaCha8Rng::seed_from_u64(mixed), seed }
    }

    /// The case seed, for discrete choices that must not change on resampling.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn real(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    /// Modulus uniform in [lo, hi), uniform phase.
    pub fn rc(&mut self, lo: f64, hi: f64) -> C64 {
        let r = self.real(lo, hi);
        C64::from_polar(r, self.real(-PI, PI))
    }

    pub fn rcs(&mut self, n: usize, lo: f64, hi: f64) -> Vec<C64> {
        (0..n).map(|_| self.rc(lo, hi)).collect()
    }
}

/// What an evaluator produced: the compared values (if any) and the error
/// measure, with an optional note on how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub lhs: Option<C64>,
    pub rhs: Option<C64>,
    pub rel_error: f64,
    pub note: Option<String>,
}

pub type Sampler = fn(&mut Draw, usize, &QContext) -> Sample;
pub type Admissible = fn(&Sample, usize, &QContext) -> bool;
/// One side of an equality, possibly several values compared pairwise.
pub type Side = fn(&Sample, usize, &QContext) -> QResult<Vec<C64>>;
pub type Measure = fn(&Sample, usize, &QContext) -> QResult<Outcome>;

#[derive(Clone, Copy)]
pub enum Body {
    Equality { lhs: Side, rhs: Side },
    Measure(Measure),
}

#[derive(Clone, Copy)]
pub struct IdentityCase {
    pub id: &'static str,
    pub location: &'static str,
    pub kind: Kind,
    pub m_range: &'static [usize],
    pub tolerance: f64,
    pub sampler: Sampler,
    pub admissible: Admissible,
    pub body: Body,
}

impl std::fmt::Debug for IdentityCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IdentityCase")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("m_range", &self.m_range)
            .field("tolerance", &self.tolerance)
            .finish()
    }
}

impl IdentityCase {
    /// The first admissible draw for (seed, M).
    pub fn sample(&self, seed: u64, m: usize, ctx: &QContext) -> QResult<Sample> {
        let mut d = Draw::new(self.id, seed, m);
        for _ in 0..MAX_ATTEMPTS {
            let s = (self.sampler)(&mut d, m, ctx);
            if (self.admissible)(&s, m, ctx) {
                return Ok(s);
            }
        }
        Err(QError::SamplerExhausted { id: self.id.to_string(), m, attempts: MAX_ATTEMPTS })
    }

    /// Evaluates the case at a given sample.
    pub fn evaluate(&self, s: &Sample, m: usize, ctx: &QContext) -> QResult<Outcome> {
        match self.body {
            Body::Equality { lhs, rhs } => compare(&lhs(s, m, ctx)?, &rhs(s, m, ctx)?),
            Body::Measure(f) => f(s, m, ctx),
        }
    }
}

pub fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-30)
}

/// Pairwise comparison; reports the worst pair.
fn compare(l: &[C64], r: &[C64]) -> QResult<Outcome> {
    if l.len() != r.len() || l.is_empty() {
        return Err(QError::Domain(format!("sides have {} and {} values", l.len(), r.len())));
    }
    let (k, e) = l
        .iter()
        .zip(r)
        .map(|(&a, &b)| rel(a, b))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, e)| if e > acc.1 || e.is_nan() { (k, e) } else { acc });
    if e.is_nan() {
        return Err(QError::NonFinite("relative error".into()));
    }
    let note = (l.len() > 1).then(|| format!("worst of {} comparisons at #{k}", l.len()));
    Ok(Outcome { lhs: Some(l[k]), rhs: Some(r[k]), rel_error: e, note })
}

/// Negative control for an equality case: the error when one side is
/// evaluated with `name` scaled by `factor` and the other is not, taking the
/// larger of the two orientations.
pub fn perturbed_error(case: &IdentityCase, s: &Sample, name: &str, factor: f64, m: usize, ctx: &QContext) -> QResult<f64> {
    let Body::Equality { lhs, rhs } = case.body else {
        return Err(QError::Config(format!("{} is not an equality case", case.id)));
    };
    let mut p = s.clone();
    let v = p.get(name);
    p.set(name, v * factor);
    let (l0, r0) = (lhs(s, m, ctx)?, rhs(s, m, ctx)?);
    let e1 = match lhs(&p, m, ctx) {
        Ok(l1) => compare(&l1, &r0)?.rel_error,
        Err(_) => f64::INFINITY,
    };
    let e2 = match rhs(&p, m, ctx) {
        Ok(r1) => compare(&l0, &r1)?.rel_error,
        Err(_) => f64::INFINITY,
    };
    Ok(e1.max(e2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub id: String,
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    pub q: C64,
    pub params: Sample,
    pub lhs: Option<C64>,
    pub rhs: Option<C64>,
    /// None when evaluation failed.
    pub rel_error: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub reason: Option<String>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CheckOptions {
    /// Replaces every case's own tolerance.
    pub tolerance: Option<f64>,
    /// Record wall time; otherwise wall_ms is 0 so reruns are identical.
    pub timing: bool,
}

pub fn catalog() -> Vec<IdentityCase> {
    let mut c = cases::all();
    c.sort_by_key(|k| k.id);
    c
}

pub fn lookup(id: &str) -> Option<IdentityCase> {
    catalog().into_iter().find(|c| c.id == id)
}

fn find(id: &str) -> QResult<IdentityCase> {
    lookup(id).ok_or_else(|| QError::Config(format!("unknown identity id '{id}'")))
}

/// Balanced a_1..a_{M+3}, b_1..b_{M+3} with |a_{M+1}/b_{M+3}| < 0.6 and
/// all endpoint and pole ratios clear of q^Z.
pub fn sample_balanced(seed: u64, m: usize, ctx: &QContext) -> QResult<BalancedParams> {
    let mut d = Draw::new("balanced", seed, m);
    for _ in 0..MAX_ATTEMPTS {
        let s = cases::draw_balanced(&mut d, m, ctx);
        if cases::balanced_ok(&s, m, ctx, 0.6) {
            return Ok(cases::bp_of(&s, m));
        }
    }
    Err(QError::SamplerExhausted { id: "balanced".into(), m, attempts: MAX_ATTEMPTS })
}

/// Whether a balanced point passes the sampler's admissibility rules.
pub fn balanced_admissible(bp: &BalancedParams, ctx: &QContext) -> bool {
    let m = bp.m();
    let mut s = Sample::default();
    s.set_vec("a", &bp.a);
    s.set_vec("b", &bp.b);
    bp.check_shape().is_ok() && cases::balanced_ok(&s, m, ctx, 0.6)
}

/// Evaluates a case at an explicit sample; evaluator errors become failed
/// reports.
pub fn check_sample(
    case: &IdentityCase,
    s: &Sample,
    seed: u64,
    m: usize,
    ctx: &QContext,
    opts: &CheckOptions,
) -> CheckReport {
    let start = Instant::now();
    let tolerance = opts.tolerance.unwrap_or(case.tolerance);
    let outcome = case.evaluate(s, m, ctx);
    let wall_ms = if opts.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let mut r = CheckReport {
        id: case.id.to_string(),
        seed,
        m,
        q: ctx.q,
        params: s.clone(),
        lhs: None,
        rhs: None,
        rel_error: None,
        tolerance,
        pass: false,
        reason: None,
        wall_ms,
    };
    match outcome {
        Ok(o) => {
            r.lhs = o.lhs;
            r.rhs = o.rhs;
            r.rel_error = Some(o.rel_error);
            r.pass = o.rel_error <= tolerance;
            r.reason = o.note;
        }
        Err(e) => r.reason = Some(e.to_string()),
    }
    r
}

pub fn check(id: &str, seed: u64, m: usize, ctx: &QContext) -> QResult<CheckReport> {
    check_with(id, seed, m, ctx, &CheckOptions::default())
}

/// Samples and evaluates one case. Unknown ids and M outside the case's
/// range are configuration errors; everything else lands in the report.
pub fn check_with(id: &str, seed: u64, m: usize, ctx: &QContext, opts: &CheckOptions) -> QResult<CheckReport> {
    let case = find(id)?;
    if !case.m_range.contains(&m) {
        return Err(QError::Config(format!("{id} is defined for M in {:?}, got {m}", case.m_range)));
    }
    Ok(run_one(&case, seed, m, ctx, opts))
}

fn run_one(case: &IdentityCase, seed: u64, m: usize, ctx: &QContext, opts: &CheckOptions) -> CheckReport {
    match case.sample(seed, m, ctx) {
        Ok(s) => check_sample(case, &s, seed, m, ctx, opts),
        Err(e) => CheckReport {
            id: case.id.to_string(),
            seed,
            m,
            q: ctx.q,
            params: Sample::default(),
            lhs: None,
            rhs: None,
            rel_error: None,
            tolerance: opts.tolerance.unwrap_or(case.tolerance),
            pass: false,
            reason: Some(e.to_string()),
            wall_ms: 0.0,
        },
    }
}

/// Runs every (id, seed, M) combination, M restricted to each case's range
/// (all of it when `ms` is None). Reports are sorted by (id, M, seed).
pub fn run_suite(
    ids: &[String],
    seeds: Range<u64>,
    ms: Option<&[usize]>,
    ctx: &QContext,
    opts: &CheckOptions,
) -> QResult<Vec<CheckReport>> {
    let cases: Vec<IdentityCase> = ids.iter().map(|id| find(id)).collect::<QResult<_>>()?;
    let mut jobs = Vec::new();
    for case in &cases {
        for &m in case.m_range.iter().filter(|m| ms.map_or(true, |list| list.contains(m))) {
            for seed in seeds.clone() {
                jobs.push((case, m, seed));
            }
        }
    }
    let mut reports: Vec<CheckReport> = jobs.par_iter().map(|&(c, m, seed)| run_one(c, seed, m, ctx, opts)).collect();
    reports.sort_by(|a, b| (&a.id, a.m, a.seed).cmp(&(&b.id, b.m, b.seed)));
    reports.dedup_by(|a, b| (&a.id, a.m, a.seed) == (&b.id, b.m, b.seed));
    Ok(reports)
}

pub fn all_ids() -> Vec<String> {
    catalog().iter().map(|c| c.id.to_string()).collect()
}
