//! `qrp`: list the identity catalog, verify identities over seeded samples,
//! and evaluate single functions from JSON parameter files.
//!
//! Exit codes: 0 when everything passes, 1 when a check fails, 2 on a
//! configuration, parameter-file or evaluation error.

mod config;
mod eval;
mod report;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrp_core::identities::{catalog, run_suite};
use qrp_core::QContext;

use config::{parse_ids, parse_m_list, parse_q, parse_seeds, Format, RunConfig};
use eval::{EvalFormat, Target};
use report::Row;

#[derive(Parser)]
#[command(name = "qrp", version, about = "Evaluate and verify q-hypergeometric identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the identity catalog, sorted by id.
    List,
    /// Check identities over seeded random samples.
    Verify(VerifyArgs),
    /// Evaluate one function or integral from a JSON parameter file.
    Eval(EvalArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated ids, "all", or a family such as "degene.*".
    #[arg(long, default_value = "all")]
    ids: String,
    /// Seed range A..B (B excluded), A..=B, or a single seed.
    #[arg(long, default_value = "0..10")]
    seeds: String,
    /// Comma-separated M values; each case keeps only those in its range.
    #[arg(long)]
    m: Option<String>,
    /// The base q as RE or RE,IM.
    #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
    q: String,
    /// Pass threshold replacing every case's own tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Cap on the number of series shells.
    #[arg(long)]
    shells: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
    /// Record wall time per check (reports are otherwise reproducible byte for byte).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(value_enum)]
    target: Target,
    /// JSON parameter file, or - for standard input.
    params: PathBuf,
    #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
    q: String,
    #[arg(long)]
    shells: Option<usize>,
    #[arg(long, value_enum, default_value_t = EvalFormat::Human)]
    format: EvalFormat,
}

impl VerifyArgs {
    fn config(&self) -> Result<RunConfig, String> {
        Ok(RunConfig {
            ids: parse_ids(&self.ids).map_err(|e| format!("--ids: {e}"))?,
            seeds: parse_seeds(&self.seeds).map_err(|e| format!("--seeds: {e}"))?,
            m_values: self.m.as_deref().map(parse_m_list).transpose().map_err(|e| format!("--m: {e}"))?,
            q: parse_q(&self.q).map_err(|e| format!("--q: {e}"))?,
            rel_tol: self.tol,
            shell_cap: self.shells,
            out: self.out.clone(),
            format: self.format,
            timing: self.timing,
        })
    }
}

fn list() -> String {
    let cases = catalog();
    let width = cases.iter().map(|c| c.id.len()).max().unwrap_or(0);
    let mut out = format!("{:<width$}  {:<12}  {:<7}  {:>8}  location\n", "id", "kind", "M", "tol");
    for c in &cases {
        let ms = c.m_range.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",");
        out += &format!("{:<width$}  {:<12}  {:<7}  {:>8.0e}  {}\n", c.id, c.kind.as_str(), ms, c.tolerance, c.location);
    }
    out
}

/// Runs the suite; Ok(true) when every check passed.
fn verify(cfg: &RunConfig) -> Result<bool, String> {
    let ctx = cfg.context()?;
    let ids = cfg.resolve_ids()?;
    let reports = run_suite(&ids, cfg.seeds.clone(), cfg.m_values.as_deref(), &ctx, &cfg.options()).map_err(|e| e.to_string())?;
    let rows: Vec<Row> = reports.iter().map(Row::from).collect();
    let text = report::render(&rows, cfg.format)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    if cfg.out.is_some() || cfg.format != Format::Human {
        eprintln!("{}", report::summary(&rows));
    }
    Ok(rows.iter().all(|r| r.pass))
}

fn eval(args: &EvalArgs) -> Result<String, String> {
    let q = parse_q(&args.q).map_err(|e| format!("--q: {e}"))?;
    let mut ctx = QContext::new(q).map_err(|e| format!("--q: {e}"))?;
    if let Some(cap) = args.shells {
        ctx = ctx.with_shell_cap(cap);
        ctx.validate().map_err(|e| format!("--shells: {e}"))?;
    }
    let text = if args.params.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| format!("cannot read standard input: {e}"))?;
        s
    } else {
        std::fs::read_to_string(&args.params).map_err(|e| format!("cannot read {}: {e}", args.params.display()))?
    };
    Ok(eval::evaluate(args.target, &text, &ctx)?.render(args.format))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::List => {
            print!("{}", list());
            Ok(true)
        }
        Command::Verify(args) => args.config().and_then(|cfg| verify(&cfg)),
        Command::Eval(args) => eval(args).map(|text| {
            print!("{text}");
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
