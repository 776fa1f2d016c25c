use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cpmap::choi::choi_to_kraus;
use cpmap::io::{matrix_to_json, parse_instance, parse_matrix_arg, parse_report, to_json_string, JsonMatrix};
use cpmap::pipeline::{exit_code, run_apply, run_solve, run_verify, Method, SolveOptions};
use cpmap::Error;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 4;

/// Completely positive maps with prescribed values, via Choi-matrix feasibility.
#[derive(Parser)]
#[command(name = "cpmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write a report with the Choi matrix and Kraus operators.
    Solve(SolveArgs),
    /// Decide feasibility only; the report carries the verdict and any certificate.
    Certify(SolveArgs),
    /// Apply the map of a solved report to a matrix.
    Apply {
        #[arg(long)]
        report: PathBuf,
        /// Matrix as JSON rows, inline or a file path.
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute a minimal Kraus decomposition from a report's Choi matrix.
    Kraus {
        #[arg(long)]
        report: PathBuf,
        /// Absolute eigenvalue cutoff; defaults to 1e-9 times the largest eigenvalue.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a report against its instance.
    Verify {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_parser = ["exp", "barrier", "auto"])]
    method: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    trace_preserving: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    parallel: bool,
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn solve(args: &SolveArgs, emit_solution: bool) -> Result<u8, Error> {
    let (mut inst, section) = parse_instance(&args.instance)?;
    inst.trace_preserving |= args.trace_preserving;
    let mut opts = SolveOptions::default();
    if let Some(s) = &section {
        opts = opts.with_section(s)?;
    }
    if let Some(m) = &args.method {
        opts.method = m.parse::<Method>()?;
    }
    if let Some(t) = args.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInstance("--tol must be positive".into()));
        }
        opts.tol = t;
    }
    if let Some(m) = args.max_iters {
        opts.max_iters = m;
    }
    if let Some(s) = args.seed {
        opts.seed = s;
    }
    opts.parallel = args.parallel;
    opts.emit_solution = emit_solution;
    let report = run_solve(&inst, &opts)?;
    emit(&to_json_string(&report)?, args.out.as_deref())?;
    let residual = report.max_residual.map_or("n/a".to_string(), |r| format!("{r:.3e}"));
    eprintln!(
        "{}: {} (method {}, max residual {residual})",
        args.instance.display(),
        serde_json::to_value(report.status).expect("verdict serializes").as_str().unwrap_or("?"),
        report.method
    );
    Ok(exit_code(&report) as u8)
}

#[derive(Serialize)]
struct KrausOutput {
    count: usize,
    kraus: Vec<JsonMatrix>,
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Solve(args) => solve(&args, true),
        Command::Certify(args) => solve(&args, false),
        Command::Apply { report, matrix, out } => {
            let report = parse_report(&report)?;
            let a = parse_matrix_arg(&matrix)?;
            let img = run_apply(&report, &a)?;
            emit(&to_json_string(&matrix_to_json(&img))?, out.as_deref())?;
            Ok(0)
        }
        Command::Kraus { report, tol, out } => {
            let report = parse_report(&report)?;
            let choi = report
                .choi_matrix()?
                .ok_or_else(|| Error::InvalidInstance("report carries no Choi matrix".into()))?;
            let tol = match tol {
                Some(t) => t,
                None => choi.rank_tolerance()?,
            };
            let ks = choi_to_kraus(&choi, tol)?;
            let payload = KrausOutput {
                count: ks.len(),
                kraus: ks.elements.iter().map(matrix_to_json).collect(),
            };
            emit(&to_json_string(&payload)?, out.as_deref())?;
            Ok(0)
        }
        Command::Verify { report, instance, tol } => {
            let report = parse_report(&report)?;
            let (inst, _) = parse_instance(&instance)?;
            let verdict = run_verify(&report, &inst, tol)?;
            for c in &verdict.checks {
                println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            }
            match verdict.first_failure() {
                None => Ok(0),
                Some(c) => {
                    eprintln!("verification failed: {}", c.name);
                    Ok(EXIT_VERIFY_FAILED)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Parse(_) | Error::InvalidInstance(_) | Error::Io(_) | Error::DimensionMismatch { .. } => EXIT_INPUT,
                // numerical breakdown: no verdict could be reached
                _ => 3,
            };
            ExitCode::from(code)
        }
    }
}
