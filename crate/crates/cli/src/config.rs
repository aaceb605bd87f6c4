//! Run configuration for `verify` and the parsers behind its flags.

use std::ops::Range;
use std::path::PathBuf;

use clap::ValueEnum;
use num_complex::Complex64;
use qrp_core::identities::{all_ids, lookup, CheckOptions};
use qrp_core::QContext;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Identity ids; "all" selects the whole catalog and "prefix.*" a family.
    pub ids: Vec<String>,
    pub seeds: Range<u64>,
    /// Restricts M; None runs each case over its own range.
    pub m_values: Option<Vec<usize>>,
    pub q: Complex64,
    /// Replaces every case's tolerance.
    pub rel_tol: Option<f64>,
    pub shell_cap: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub timing: bool,
}

impl RunConfig {
    pub fn context(&self) -> Result<QContext, String> {
        let mut ctx = QContext::new(self.q).map_err(|e| format!("--q: {e}"))?;
        if let Some(cap) = self.shell_cap {
            ctx = ctx.with_shell_cap(cap);
            ctx.validate().map_err(|e| format!("--shells: {e}"))?;
        }
        Ok(ctx)
    }

    pub fn options(&self) -> CheckOptions {
        CheckOptions { tolerance: self.rel_tol, timing: self.timing }
    }

    /// Expands "all" and "prefix.*" and rejects unknown ids by name.
    pub fn resolve_ids(&self) -> Result<Vec<String>, String> {
        let catalog = all_ids();
        let mut out = Vec::new();
        for id in &self.ids {
            let matched: Vec<String> = if id == "all" {
                catalog.clone()
            } else if let Some(prefix) = id.strip_suffix('*') {
                catalog.iter().filter(|c| c.starts_with(prefix)).cloned().collect()
            } else if lookup(id).is_some() {
                vec![id.clone()]
            } else {
                vec![]
            };
            if matched.is_empty() {
                return Err(format!("unknown identity id '{id}' (see `qrp list`)"));
            }
            out.extend(matched);
        }
        out.sort();
        out.dedup();
        if let Some(ms) = &self.m_values {
            if !out.iter().any(|id| lookup(id).unwrap().m_range.iter().any(|m| ms.contains(m))) {
                return Err(format!("--m {ms:?} matches no M value of the selected identities"));
            }
        }
        Ok(out)
    }
}

/// Splits on commas, keeping the byte offset of each piece for messages.
fn pieces(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.split(',').scan(0, |pos, p| {
        let start = *pos;
        *pos += p.len() + 1;
        Some((start, p))
    })
}

fn number<T: std::str::FromStr>(p: &str, pos: usize, what: &str) -> Result<T, String> {
    p.trim().parse().map_err(|_| format!("invalid {what} '{p}' at position {pos}"))
}

/// "RE" or "RE,IM".
pub fn parse_q(s: &str) -> Result<Complex64, String> {
    let parts: Vec<(usize, &str)> = pieces(s).collect();
    if parts.len() > 2 {
        return Err(format!("expected RE[,IM], found a third component at position {}", parts[2].0));
    }
    let re = number(parts[0].1, parts[0].0, "number")?;
    let im = match parts.get(1) {
        Some(&(pos, p)) => number(p, pos, "number")?,
        None => 0.0,
    };
    Ok(Complex64::new(re, im))
}

/// "A..B" (B excluded), "A..=B" or a single seed "A".
pub fn parse_seeds(s: &str) -> Result<Range<u64>, String> {
    let (lo, hi) = match s.split_once("..") {
        None => {
            let a: u64 = number(s, 0, "seed")?;
            (a, a + 1)
        }
        Some((a, b)) => {
            let lo = number(a, 0, "seed")?;
            let (inclusive, b, pos) = match b.strip_prefix('=') {
                Some(rest) => (true, rest, a.len() + 3),
                None => (false, b, a.len() + 2),
            };
            let hi: u64 = number(b, pos, "seed")?;
            (lo, if inclusive { hi + 1 } else { hi })
        }
    };
    if lo >= hi {
        return Err(format!("empty seed range '{s}'"));
    }
    Ok(lo..hi)
}

/// Comma-separated M values.
pub fn parse_m_list(s: &str) -> Result<Vec<usize>, String> {
    let mut ms = pieces(s).map(|(pos, p)| number::<usize>(p, pos, "M value")).collect::<Result<Vec<_>, _>>()?;
    if ms.contains(&0) {
        return Err("M values start at 1".into());
    }
    ms.sort_unstable();
    ms.dedup();
    Ok(ms)
}

/// Comma-separated ids.
pub fn parse_ids(s: &str) -> Result<Vec<String>, String> {
    let ids: Vec<String> = s.split(',').map(|p| p.trim().to_string()).collect();
    match ids.iter().position(|p| p.is_empty()) {
        Some(k) => Err(format!("empty id in list (entry {})", k + 1)),
        None => Ok(ids),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunConfig {
        RunConfig {
            ids: vec!["qrp.system".into(), "degene.*".into()],
            seeds: 3..7,
            m_values: Some(vec![1, 2]),
            q: Complex64::new(0.48, 0.18),
            rel_tol: Some(1e-9),
            shell_cap: Some(500),
            out: Some("reports/run.json".into()),
            format: Format::Csv,
            timing: false,
        }
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = sample();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn q_forms() {
        assert_eq!(parse_q("0.5").unwrap(), Complex64::new(0.5, 0.0));
        assert_eq!(parse_q("0.48,-0.18").unwrap(), Complex64::new(0.48, -0.18));
        assert_eq!(parse_q("0.5,x").unwrap_err(), "invalid number 'x' at position 4");
        assert!(parse_q("1,2,3").unwrap_err().contains("position 4"));
    }

    #[test]
    fn seed_forms() {
        assert_eq!(parse_seeds("0..10").unwrap(), 0..10);
        assert_eq!(parse_seeds("0..=9").unwrap(), 0..10);
        assert_eq!(parse_seeds("4").unwrap(), 4..5);
        assert_eq!(parse_seeds("2..x").unwrap_err(), "invalid seed 'x' at position 3");
        assert_eq!(parse_seeds("2..=y").unwrap_err(), "invalid seed 'y' at position 4");
        assert!(parse_seeds("5..5").is_err());
    }

    #[test]
    fn m_lists() {
        assert_eq!(parse_m_list("2,1,2").unwrap(), vec![1, 2]);
        assert_eq!(parse_m_list("1,b").unwrap_err(), "invalid M value 'b' at position 2");
        assert!(parse_m_list("0").is_err());
    }

    #[test]
    fn id_resolution() {
        let mut cfg = sample();
        let ids = cfg.resolve_ids().unwrap();
        assert!(ids.contains(&"qrp.system".to_string()));
        assert!(ids.iter().filter(|i| i.starts_with("degene.")).count() >= 3);
        cfg.ids = vec!["all".into()];
        assert_eq!(cfg.resolve_ids().unwrap(), all_ids());
        cfg.ids = vec!["nosuch.id".into()];
        assert!(cfg.resolve_ids().unwrap_err().contains("nosuch.id"));
        cfg.ids = vec!["qrp.system".into()];
        cfg.m_values = Some(vec![3]);
        assert!(cfg.resolve_ids().is_err());
    }
}
