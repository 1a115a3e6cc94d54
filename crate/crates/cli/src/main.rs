//! `wnc`: run experiment specs, audit decompositions, cross-check solvers
//! against brute force, and re-emit reports.
//!
//! Exit codes: 0 when every record is fine, 2 when some records errored or
//! a check failed, 1 when the input is invalid.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use wnc_core::harness::{self, ExperimentSpec, Format, Report};
use wnc_core::profiles::{SearchConfig, SearchMode};
use wnc_core::PointSet;

#[derive(Parser)]
#[command(name = "wnc", version, about = "Finite measures of weak noncompactness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec (schema wnc-spec/1).
    Run {
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Cap on planned solver calls per exact search.
        #[arg(long)]
        budget: Option<u64>,
        /// Overrides the mode of every quantity.
        #[arg(long)]
        mode: Option<SearchMode>,
        /// Directory for report.csv and report.json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        /// Earlier report.json that must match this run.
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Audit U(A_n, n) <= eps for a JSON list of point sets.
    AuditDecomposition {
        pieces: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, default_value = "exact")]
        mode: SearchMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare min-norm-point and hull-distance solvers with grid search.
    OracleCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 20)]
        mesh: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-emit a report.json as csv or json.
    Emit {
        report: PathBuf,
        #[arg(long, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Outcome {
    Ok,
    Partial,
}

fn write_or_print(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cmd: Command) -> std::result::Result<Outcome, (u8, anyhow::Error)> {
    let invalid = |e: anyhow::Error| (1u8, e);
    let failed = |e: anyhow::Error| (2u8, e);
    match cmd {
        Command::Run { spec, seed, budget, mode, out, threads, compare } => {
            let text = std::fs::read_to_string(&spec)
                .with_context(|| format!("reading {}", spec.display()))
                .map_err(invalid)?;
            let mut s = ExperimentSpec::from_json(&text).map_err(|e| invalid(e.into()))?;
            if let Some(v) = seed {
                s.seed = v;
            }
            if let Some(v) = budget {
                s.budgets.search = v;
            }
            if let Some(m) = mode {
                s.mode = m;
                s.quantities.iter_mut().for_each(|q| q.mode = None);
            }
            s.validate().map_err(|e| invalid(e.into()))?;
            let report = match threads {
                Some(t) => harness::run_with_threads(&s, t),
                None => harness::run(&s),
            }
            .map_err(|e| failed(e.into()))?;
            let (csv, json) = match &out {
                Some(dir) => (Some(dir.join("report.csv")), Some(dir.join("report.json"))),
                None => (s.outputs.csv.clone(), s.outputs.json.clone()),
            };
            let emit = |f, p: &Path| harness::emit(&report, f, p).map_err(|e| failed(e.into()));
            if let Some(p) = &csv {
                emit(Format::Csv, p)?;
            }
            if let Some(p) = &json {
                emit(Format::Json, p)?;
            }
            if csv.is_none() && json.is_none() {
                print!("{}", harness::render_csv(&report).map_err(|e| failed(e.into()))?);
            }
            eprintln!(
                "{} records, {} errors, spec {} ({:.0} ms)",
                report.records.len(),
                report.error_count(),
                &report.spec_hash[..12],
                report.wall_time_ms
            );
            if let Some(prev) = compare {
                let old: Report = harness::load_report(&prev).map_err(|e| invalid(e.into()))?;
                harness::compare_reports(&old, &report).map_err(|e| failed(e.into()))?;
                eprintln!("matches {}", prev.display());
            }
            Ok(if report.error_count() == 0 { Outcome::Ok } else { Outcome::Partial })
        }
        Command::AuditDecomposition { pieces, eps, tol, seed, budget, mode, out } => {
            let text = std::fs::read_to_string(&pieces)
                .with_context(|| format!("reading {}", pieces.display()))
                .map_err(invalid)?;
            let sets: Vec<PointSet> =
                serde_json::from_str(&text).context("pieces must be a JSON list of point sets").map_err(invalid)?;
            let mut cfg = SearchConfig::default();
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(b) = budget {
                cfg.budget = b as u128;
            }
            let r = harness::decomposition_audit(&sets, eps, tol, mode, &cfg).map_err(|e| invalid(e.into()))?;
            write_or_print(&harness::render_json(&r).map_err(|e| failed(e.into()))?, out.as_deref())
                .map_err(failed)?;
            for p in &r.pieces {
                let status = match (p.passed, &p.error) {
                    (_, Some(e)) => format!("ERROR {e}"),
                    (Some(true), _) => "PASS".into(),
                    _ => "FAIL".into(),
                };
                eprintln!("piece {} ({} points): {status}", p.piece, p.size);
            }
            Ok(if r.errors == 0 { Outcome::Ok } else { Outcome::Partial })
        }
        Command::OracleCheck { seed, instances, mesh, out } => {
            let r = harness::oracle_check(instances, seed, mesh, 1e-9).map_err(|e| invalid(e.into()))?;
            write_or_print(&harness::render_json(&r).map_err(|e| failed(e.into()))?, out.as_deref())
                .map_err(failed)?;
            let bad = r.rows.iter().filter(|x| !x.passed).count();
            eprintln!("{} instances, {bad} mismatches", r.rows.len());
            Ok(if r.passed { Outcome::Ok } else { Outcome::Partial })
        }
        Command::Emit { report, format, out } => {
            let r = harness::load_report(&report).map_err(|e| invalid(e.into()))?;
            let text = match format {
                Format::Csv => harness::render_csv(&r),
                Format::Json => harness::render_json(&r),
            }
            .map_err(|e| failed(e.into()))?;
            write_or_print(&text, out.as_deref()).map_err(failed)?;
            Ok(if r.error_count() == 0 { Outcome::Ok } else { Outcome::Partial })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(2),
        Err((code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
