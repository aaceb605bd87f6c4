//! Report rows and the three output formats.

use std::fmt::Write as _;

use qrp_core::identities::CheckReport;
use serde::Serialize;

use crate::config::Format;

/// The stable public schema of one verification result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub id: String,
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    pub q: [f64; 2],
    pub rel_error: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub wall_ms: f64,
}

impl From<&CheckReport> for Row {
    fn from(r: &CheckReport) -> Self {
        Row {
            id: r.id.clone(),
            seed: r.seed,
            m: r.m,
            q: [r.q.re, r.q.im],
            rel_error: r.rel_error.filter(|e| e.is_finite()),
            pass: r.pass,
            reason: r.reason.clone(),
            wall_ms: r.wall_ms,
        }
    }
}

pub fn render(rows: &[Row], format: Format) -> Result<String, String> {
    match format {
        Format::Json => serde_json::to_string_pretty(rows).map(|s| s + "\n").map_err(|e| e.to_string()),
        Format::Csv => csv(rows),
        Format::Human => Ok(human(rows)),
    }
}

fn csv(rows: &[Row]) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "seed", "M", "q_re", "q_im", "rel_error", "pass", "reason", "wall_ms"]).map_err(|e| e.to_string())?;
    for r in rows {
        w.write_record([
            r.id.clone(),
            r.seed.to_string(),
            r.m.to_string(),
            r.q[0].to_string(),
            r.q[1].to_string(),
            r.rel_error.map_or(String::new(), |e| format!("{e:e}")),
            r.pass.to_string(),
            r.reason.clone().unwrap_or_default(),
            r.wall_ms.to_string(),
        ])
        .map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

fn human(rows: &[Row]) -> String {
    let width = rows.iter().map(|r| r.id.len()).max().unwrap_or(2).max(2);
    let mut s = String::new();
    let _ = writeln!(s, "{:<width$}  {:>4}  {:>2}  {:>10}  {:<4}  reason", "id", "seed", "M", "rel_error", "pass");
    for r in rows {
        let err = r.rel_error.map_or("-".to_string(), |e| format!("{e:.3e}"));
        let verdict = if r.pass { "ok" } else { "FAIL" };
        let reason = r.reason.as_deref().unwrap_or("");
        let line = format!("{:<width$}  {:>4}  {:>2}  {:>10}  {:<4}  {reason}", r.id, r.seed, r.m, err, verdict);
        let _ = writeln!(s, "{}", line.trim_end());
    }
    let _ = writeln!(s, "{}", summary(rows));
    s
}

/// "n pass / n fail / worst rel_error".
pub fn summary(rows: &[Row]) -> String {
    let pass = rows.iter().filter(|r| r.pass).count();
    let worst = rows.iter().filter_map(|r| r.rel_error).fold(None, |w: Option<f64>, e| Some(w.map_or(e, |w| w.max(e))));
    let worst = worst.map_or("-".to_string(), |w| format!("{w:.3e}"));
    format!("{pass} pass / {} fail / worst rel_error {worst}", rows.len() - pass)
}
