//! The q-Appell–Lauricella series φ_D and three further solutions of its
//! q-difference system.

use serde::{Deserialize, Serialize};

use super::{converged, sum_box, sum_shells, sum_shells_through, vandermonde_ratio, PochRatio, Powers, SeriesResult};
use crate::error::{QError, QResult};
use crate::qcore::{pinf, q_binom2, QContext, C64, ONE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QalParams {
    #[serde(rename = "A")]
    pub a: C64,
    #[serde(rename = "B")]
    pub b: Vec<C64>,
    #[serde(rename = "C")]
    pub c: C64,
    pub x: Vec<C64>,
}

impl QalParams {
    pub fn m(&self) -> usize {
        self.x.len()
    }

    fn check(&self) -> QResult<()> {
        if self.x.is_empty() || self.b.len() != self.x.len() {
            return Err(QError::Domain("φ_D needs M ≥ 1 and one B_i per x_i".into()));
        }
        Ok(())
    }
}

/// φ_D(A; B; C; x) = Σ_l (A)_{|l|}/(C)_{|l|} ∏ (B_i)_{l_i}/(q)_{l_i} x_i^{l_i}.
pub fn phi_d(p: &QalParams, ctx: &QContext) -> QResult<SeriesResult> {
    p.check()?;
    let m = p.m();
    let mut global = PochRatio::new(vec![p.a], vec![p.c], ctx);
    let mut per_i: Vec<PochRatio> = p.b.iter().map(|&bi| PochRatio::new(vec![bi], vec![ctx.q], ctx)).collect();
    let mut xs: Vec<Powers> = p.x.iter().map(|&xi| Powers::new(xi)).collect();
    let mut term = |l: &[usize]| {
        let mut t = global.get(l.iter().sum());
        for i in 0..m {
            t *= per_i[i].get(l[i]) * xs[i].get(l[i]);
        }
        t
    };
    if let Some(n) = ctx.q_power_index(p.a) {
        return sum_shells_through(&mut term, m, n);
    }
    if let Some(bounds) = p.b.iter().map(|&bi| ctx.q_power_index(bi)).collect::<Option<Vec<_>>>() {
        return sum_box(&mut term, &bounds);
    }
    if p.x.iter().any(|xi| xi.norm() >= 1.0) {
        return Err(QError::Domain("φ_D needs |x_i| < 1".into()));
    }
    converged(sum_shells(&mut term, m, ctx)?, "phi_D")
}

/// The solution families of the q-Appell–Lauricella system (k = 1, 2, 3),
/// each including its infinite-product prefactor.
pub fn qal_solution(k: usize, p: &QalParams, ctx: &QContext) -> QResult<SeriesResult> {
    p.check()?;
    let m = p.m();
    let q = ctx.q;
    let (a, c) = (p.a, p.c);
    let big_b: C64 = p.b.iter().product();
    let y: Vec<C64> = p.b.iter().zip(&p.x).map(|(&bi, &xi)| bi * xi).collect();
    let x = p.x.clone();
    // ∏_j (y_i/x_j)_{l_i} / ∏_j (q y_i/y_j)_{l_i}, shared by every family.
    let cross = |extra_num: &dyn Fn(usize) -> Vec<C64>, extra_den: &dyn Fn(usize) -> Vec<C64>| -> Vec<PochRatio> {
        (0..m)
            .map(|i| {
                let mut num: Vec<C64> = x.iter().map(|&xj| y[i] / xj).collect();
                num.extend(extra_num(i));
                let mut den: Vec<C64> = y.iter().map(|&yj| q * y[i] / yj).collect();
                den.extend(extra_den(i));
                PochRatio::new(num, den, ctx)
            })
            .collect()
    };
    let base_pre: C64 = (0..m).map(|i| pinf(&[y[i]], ctx) / pinf(&[x[i]], ctx)).product();
    let s = match k {
        1 => {
            let pre: C64 = (0..m).map(|i| pinf(&[a * x[i], y[i]], ctx) / pinf(&[a * y[i], x[i]], ctx)).product();
            let mut global = PochRatio::new(vec![a], vec![c], ctx);
            let mut lead: Vec<PochRatio> =
                (0..m).map(|i| PochRatio::new(vec![a * y[i] / q], vec![a * x[i]], ctx)).collect();
            let mut per_i = cross(&|i| vec![a * y[i] / c], &|i| vec![y[i]]);
            let mut zs: Vec<Powers> = (0..m).map(|i| Powers::new(p.b[i] * c * x[i] / big_b)).collect();
            let yv = y.clone();
            let mut term = |l: &[usize]| {
                let n: usize = l.iter().sum();
                let mut t = q_binom2(n, ctx) * vandermonde_ratio(&yv, l, ctx) * global.get(n);
                for i in 0..m {
                    let ay = a * yv[i] / q;
                    t *= (ONE - ay * ctx.qn((n + l[i]) as i64)) / (ONE - ay)
                        * lead[i].get(n)
                        * per_i[i].get(l[i])
                        * zs[i].get(l[i])
                        * q_binom2(l[i], ctx);
                }
                t
            };
            let r = converged(sum_shells(&mut term, m, ctx)?, "q-AL solution 1")?;
            SeriesResult { value: pre * r.value, ..r }
        }
        2 => {
            if (c / big_b).norm() >= 1.0 {
                return Err(QError::Domain("q-AL solution 2 needs |C/B| < 1".into()));
            }
            let mut per_i = cross(&|i| vec![a * y[i] / c], &|i| vec![y[i]]);
            let mut zs = Powers::new(c / big_b);
            let yv = y.clone();
            let mut term = |l: &[usize]| {
                let n: usize = l.iter().sum();
                let mut t = zs.get(n) * vandermonde_ratio(&yv, l, ctx);
                for i in 0..m {
                    t *= per_i[i].get(l[i]);
                }
                t
            };
            let r = converged(sum_shells(&mut term, m, ctx)?, "q-AL solution 2")?;
            SeriesResult { value: base_pre * r.value, ..r }
        }
        3 => {
            let mut global = PochRatio::new(vec![c / a], vec![c], ctx);
            let mut per_i = cross(&|_| vec![], &|i| vec![y[i]]);
            let mut zs = Powers::new(-a / big_b);
            let mut ys: Vec<Powers> = y.iter().map(|&yi| Powers::new(yi)).collect();
            let yv = y.clone();
            let mut term = |l: &[usize]| {
                let n: usize = l.iter().sum();
                let mut t = zs.get(n) * vandermonde_ratio(&yv, l, ctx) * global.get(n);
                for i in 0..m {
                    t *= per_i[i].get(l[i]) * ys[i].get(l[i]) * q_binom2(l[i], ctx);
                }
                t
            };
            let r = converged(sum_shells(&mut term, m, ctx)?, "q-AL solution 3")?;
            SeriesResult { value: base_pre * r.value, ..r }
        }
        _ => return Err(QError::Index(format!("q-AL solution family must be 1, 2 or 3, got {k}"))),
    };
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::rphis;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
    }

    #[test]
    fn zero_arguments_give_one() {
        let k = QContext::default();
        let p = QalParams { a: c(0.3, 0.1), b: vec![c(0.2, 0.0), c(0.5, 0.2)], c: c(0.6, 0.0), x: vec![C64::default(); 2] };
        assert_eq!(phi_d(&p, &k).unwrap().value, ONE);
    }

    #[test]
    fn one_variable_is_two_phi_one() {
        let k = QContext::default();
        let p = QalParams { a: c(0.3, 0.1), b: vec![c(0.2, -0.4)], c: c(0.6, 0.2), x: vec![c(0.35, 0.2)] };
        let two = rphis(&[p.a, p.b[0]], &[p.c], p.x[0], &k).unwrap().value;
        assert!(rel(phi_d(&p, &k).unwrap().value, two) < 1e-13);
    }

    #[test]
    fn andrews_example() {
        let k = QContext::default();
        let p = QalParams { a: c(0.3, 0.0), b: vec![c(0.2, 0.0), c(0.5, 0.0)], c: c(0.6, 0.0), x: vec![c(0.2, 0.0), c(0.0, 0.1)] };
        let lhs = phi_d(&p, &k).unwrap().value;
        let mut pre = pinf(&[p.a], &k) / pinf(&[p.c], &k);
        let mut up = vec![p.c / p.a];
        let mut low = Vec::new();
        for i in 0..2 {
            pre *= pinf(&[p.b[i] * p.x[i]], &k) / pinf(&[p.x[i]], &k);
            up.push(p.x[i]);
            low.push(p.b[i] * p.x[i]);
        }
        let rhs = pre * rphis(&up, &low, p.a, &k).unwrap().value;
        assert!(rel(lhs, rhs) < 1e-9);
    }

    #[test]
    fn family_three_tends_to_one_at_small_x() {
        let k = QContext::default();
        let p = QalParams { a: c(0.3, 0.1), b: vec![c(0.7, 0.0), c(0.9, 0.2)], c: c(0.2, 0.1), x: vec![c(1e-9, 0.0), c(0.0, 1e-9)] };
        assert!((qal_solution(3, &p, &k).unwrap().value - ONE).norm() < 1e-7);
        assert!(matches!(qal_solution(4, &p, &k), Err(QError::Index(_))));
    }

    #[test]
    fn phi_d_tends_to_one() {
        let k = QContext::default();
        let p = QalParams {
            a: c(0.3, 0.1),
            b: vec![c(0.7, 0.0), c(0.9, 0.2), c(-0.4, 0.3)],
            c: c(0.2, 0.1),
            x: vec![C64::from_polar(1e-4, 0.3), C64::from_polar(1e-4, 2.1), C64::from_polar(1e-4, -1.2)],
        };
        assert!((phi_d(&p, &k).unwrap().value - ONE).norm() <= 1e-3);
    }
}
