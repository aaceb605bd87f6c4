//! `eval`: one function or integral from a JSON parameter file.

use std::fmt;

use clap::ValueEnum;
use num_complex::Complex64;
use qrp_core::jackson::{jp_integral_sum, rp_integral_sum, BalancedParams, JPParams};
use qrp_core::series::{kajihara_w, phi_d, rphis, vwp_w, w_normalized, KajiharaParams, QalParams, SeriesResult};
use qrp_core::{QContext, QResult};
use serde::de::{self, DeserializeOwned, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    #[value(name = "kajihara_W")]
    KajiharaW,
    #[value(name = "phi_D")]
    PhiD,
    #[value(name = "rp_integral")]
    RpIntegral,
    #[value(name = "jp_integral")]
    JpIntegral,
    #[value(name = "rphis")]
    Rphis,
    #[value(name = "vwp_W")]
    VwpW,
    #[value(name = "W_normalized")]
    WNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalFormat {
    Json,
    Human,
}

/// A complex parameter written as a number or as [re, im].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cx(pub Complex64);

impl<'de> Deserialize<'de> for Cx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Cx;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a pair [re, im]")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Cx, E> {
                Ok(Cx(Complex64::new(v, 0.0)))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Cx, E> {
                self.visit_f64(v as f64)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Cx, E> {
                self.visit_f64(v as f64)
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut s: A) -> Result<Cx, A::Error> {
                let re: f64 = s.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let im: f64 = s.next_element()?.ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if s.next_element::<f64>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(Cx(Complex64::new(re, im)))
            }
        }
        d.deserialize_any(V)
    }
}

fn cs(v: &[Cx]) -> Vec<Complex64> {
    v.iter().map(|c| c.0).collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KajiharaFile {
    x: Vec<Cx>,
    a: Cx,
    u: Vec<Cx>,
    v: Vec<Cx>,
    z: Cx,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PhiDFile {
    #[serde(rename = "A")]
    big_a: Cx,
    #[serde(rename = "B")]
    big_b: Vec<Cx>,
    #[serde(rename = "C")]
    big_c: Cx,
    x: Vec<Cx>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BalancedFile {
    a: Vec<Cx>,
    b: Vec<Cx>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RpFile {
    a: Vec<Cx>,
    b: Vec<Cx>,
    i: usize,
    j: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JpFile {
    alpha: Cx,
    #[serde(rename = "A")]
    big_a: Cx,
    #[serde(rename = "B")]
    big_b: Cx,
    a: Vec<Cx>,
    b: Vec<Cx>,
    tau: Cx,
    x: Cx,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RphisFile {
    upper: Vec<Cx>,
    lower: Vec<Cx>,
    z: Cx,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VwpFile {
    a1: Cx,
    rest: Vec<Cx>,
    z: Cx,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub target: String,
    pub value: [f64; 2],
    /// Series targets report shells, integral targets lattice points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shells_used: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice_points: Option<usize>,
    pub converged: bool,
}

impl Evaluation {
    fn new(target: Target, value: Complex64) -> Self {
        let target = target.to_possible_value().unwrap().get_name().to_string();
        Evaluation { target, value: [value.re, value.im], shells_used: None, lattice_points: None, converged: true }
    }

    fn series(target: Target, r: SeriesResult) -> Self {
        Evaluation { shells_used: Some(r.shells_used), converged: r.converged, ..Self::new(target, r.value) }
    }

    pub fn render(&self, format: EvalFormat) -> String {
        match format {
            EvalFormat::Json => serde_json::to_string_pretty(self).unwrap() + "\n",
            EvalFormat::Human => {
                let [re, im] = self.value;
                let sign = if im.is_sign_negative() { '-' } else { '+' };
                let mut s = format!("{}\nvalue      {re} {sign} {}i\n", self.target, im.abs());
                if let Some(n) = self.shells_used {
                    s += &format!("shells     {n}\n");
                }
                if let Some(n) = self.lattice_points {
                    s += &format!("points     {n}\n");
                }
                s + &format!("converged  {}\n", self.converged)
            }
        }
    }
}

/// Parse failures name the offending field path.
fn parse<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            format!("parameter file: {}", e.inner())
        } else {
            format!("parameter file, field '{path}': {}", e.inner())
        }
    })
}

fn run(r: QResult<Evaluation>) -> Result<Evaluation, String> {
    r.map_err(|e| format!("evaluation failed: {e}"))
}

pub fn evaluate(target: Target, text: &str, ctx: &QContext) -> Result<Evaluation, String> {
    match target {
        Target::KajiharaW => {
            let f: KajiharaFile = parse(text)?;
            let p = KajiharaParams { x: cs(&f.x), a: f.a.0, u: cs(&f.u), v: cs(&f.v), z: f.z.0 };
            run(kajihara_w(&p, ctx).map(|r| Evaluation::series(target, r)))
        }
        Target::PhiD => {
            let f: PhiDFile = parse(text)?;
            let p = QalParams { a: f.big_a.0, b: cs(&f.big_b), c: f.big_c.0, x: cs(&f.x) };
            run(phi_d(&p, ctx).map(|r| Evaluation::series(target, r)))
        }
        Target::RpIntegral => {
            let f: RpFile = parse(text)?;
            let bp = BalancedParams { a: cs(&f.a), b: cs(&f.b) };
            run(rp_integral_sum(&bp, f.i, f.j, ctx).map(|s| Evaluation { lattice_points: Some(s.points), ..Evaluation::new(target, s.value) }))
        }
        Target::JpIntegral => {
            let f: JpFile = parse(text)?;
            let p = JPParams::new(f.alpha.0, f.big_a.0, f.big_b.0, cs(&f.a), cs(&f.b), f.tau.0, ctx);
            run(jp_integral_sum(&p, f.x.0, ctx).map(|s| Evaluation { lattice_points: Some(s.points), ..Evaluation::new(target, s.value) }))
        }
        Target::Rphis => {
            let f: RphisFile = parse(text)?;
            run(rphis(&cs(&f.upper), &cs(&f.lower), f.z.0, ctx).map(|r| Evaluation::series(target, r)))
        }
        Target::VwpW => {
            let f: VwpFile = parse(text)?;
            run(vwp_w(f.a1.0, &cs(&f.rest), f.z.0, ctx).map(|r| Evaluation::series(target, r)))
        }
        Target::WNormalized => {
            let f: BalancedFile = parse(text)?;
            let bp = BalancedParams { a: cs(&f.a), b: cs(&f.b) };
            run(w_normalized(&bp, ctx).map(|r| Evaluation::series(target, r)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qrp_core::qcore::pinf;

    fn ctx() -> QContext {
        QContext::default()
    }

    fn value(e: &Evaluation) -> Complex64 {
        Complex64::new(e.value[0], e.value[1])
    }

    #[test]
    fn q_binomial_through_rphis() {
        let k = ctx();
        let e = evaluate(Target::Rphis, r#"{"upper": [0.3], "lower": [], "z": 0.4}"#, &k).unwrap();
        let want = pinf(&[Complex64::new(0.12, 0.0)], &k) / pinf(&[Complex64::new(0.4, 0.0)], &k);
        assert!((value(&e) - want).norm() < 1e-14 * want.norm());
        assert!(e.converged && e.shells_used.is_some());
    }

    #[test]
    fn complex_pairs_and_plain_numbers_mix() {
        let k = ctx();
        let a = evaluate(Target::Rphis, r#"{"upper": [[0.3, 0.1]], "lower": [], "z": [0.4, 0]}"#, &k).unwrap();
        let b = evaluate(Target::Rphis, r#"{"upper": [[0.3, 0.1]], "lower": [], "z": 0.4}"#, &k).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn equal_endpoints_give_zero() {
        let text = r#"{"a": [0.5, 0.6, 0.7, 0.8], "b": [1, 1, 1, 1], "i": 3, "j": 3}"#;
        let e = evaluate(Target::RpIntegral, text, &ctx()).unwrap();
        assert_eq!(e.value, [0.0, 0.0]);
        assert_eq!(e.lattice_points, Some(0));
    }

    #[test]
    fn schema_errors_name_the_field() {
        let k = ctx();
        let e = evaluate(Target::WNormalized, r#"{"b": [1, 1, 1, 1]}"#, &k).unwrap_err();
        assert!(e.contains("`a`"), "{e}");
        let e = evaluate(Target::Rphis, r#"{"upper": [0.3, "x"], "lower": [], "z": 0.4}"#, &k).unwrap_err();
        assert!(e.contains("upper[1]"), "{e}");
        let e = evaluate(Target::Rphis, r#"{"upper": [], "lower": [], "z": 0.4, "w": 1}"#, &k).unwrap_err();
        assert!(e.contains("unknown field `w`"), "{e}");
        let e = evaluate(Target::Rphis, r#"{"upper": [[1, 2, 3]], "lower": [], "z": 0.4}"#, &k).unwrap_err();
        assert!(e.contains("upper[0]"), "{e}");
    }

    #[test]
    fn evaluation_errors_are_reported() {
        let e = evaluate(Target::Rphis, r#"{"upper": [0.3], "lower": [], "z": 1.5}"#, &ctx()).unwrap_err();
        assert!(e.starts_with("evaluation failed"), "{e}");
    }
}
