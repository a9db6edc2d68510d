//! The `qtomo` command line.
//!
//! Exit codes: 0 on success, 1 when a solver fails, 2 for usage, parse or
//! validation problems.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::io::{load_problem, parse_returns_csv, save_problem, write_trace};
use crate::problems::{gen_instance, portfolio_from_returns, GenConfig};
use crate::solvers::{run, run_cover, Algorithm, SolverOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qtomo", version, about = "Maximum-likelihood quantum state tomography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic problem file.
    Gen(GenArgs),
    /// Solve a problem file with one algorithm.
    Solve(SolveArgs),
    /// Solve a problem file with several algorithms and summarize.
    Compare(CompareArgs),
    /// Growth-optimal portfolio by Cover's method.
    Portfolio(PortfolioArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 3)]
    bases: usize,
    #[arg(long, default_value_t = 1000)]
    shots: u64,
    /// Rank of the ground-truth state (defaults to full rank).
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 1)]
    record_every: usize,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, default_value = "qem")]
    algorithm: String,
    #[command(flatten)]
    run: RunArgs,
    /// Where to write the CSV trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    problem: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Comma-separated algorithm names.
    #[arg(long, default_value = "qem,rrr,drrr-exact,drrr-armijo")]
    algorithms: String,
    #[command(flatten)]
    run: RunArgs,
    /// Directory receiving one `<algorithm>.csv` trace per algorithm.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    problem: PathBuf,
}

#[derive(Debug, Args)]
struct PortfolioArgs {
    /// CSV of per-period returns, one asset per column.
    #[arg(long)]
    returns: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: e.to_string(),
        }
    }

    fn solver(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_SOLVER,
            message: e.to_string(),
        }
    }

    /// Input problems are usage errors; everything else is a solver failure.
    fn classify(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::InvalidArgument(_)
            | Error::InvalidReturns { .. }
            | Error::DegenerateAsset { .. }
            | Error::Io(_) => Self::usage(e),
            other => Self::solver(other),
        }
    }
}

/// Runs the CLI with `args` (including the program name), writing to the given streams.
pub fn cli_main<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a, out),
        Command::Solve(a) => solve(a, out),
        Command::Compare(a) => compare(a, out),
        Command::Portfolio(a) => portfolio(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn gen(a: GenArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let cfg = GenConfig {
        dim: a.dim,
        bases: a.bases,
        shots_per_basis: a.shots,
        rank: a.rank.unwrap_or(a.dim),
        seed: a.seed,
    };
    let inst = gen_instance(&cfg).map_err(Failure::usage)?;
    save_problem(&inst, &a.out).map_err(Failure::usage)?;
    let _ = writeln!(
        out,
        "wrote {} (dim {}, {} outcomes)",
        a.out.display(),
        inst.dim(),
        inst.ensemble.len()
    );
    Ok(())
}

fn options(algorithm: Algorithm, r: &RunArgs) -> SolverOptions {
    SolverOptions::new(algorithm)
        .max_iters(r.max_iters)
        .certificate_tol(r.tol)
        .record_every(r.record_every)
}

fn solve(a: SolveArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let algorithm: Algorithm = a.algorithm.parse().map_err(Failure::usage)?;
    let inst = load_problem(&a.problem).map_err(Failure::classify)?;
    let report = run(&inst.ensemble, &options(algorithm, &a.run)).map_err(Failure::classify)?;
    if let Some(path) = &a.trace {
        write_trace(&report, path).map_err(Failure::usage)?;
    }
    let last = report.last_record();
    let _ = writeln!(out, "algorithm: {algorithm}");
    let _ = writeln!(out, "iterations: {}", report.iterations);
    let _ = writeln!(out, "objective: {:.17e}", last.objective_at_rho);
    let _ = writeln!(out, "certificate: {:.17e}", report.final_certificate());
    let _ = writeln!(out, "stop_reason: {}", report.stop_reason);
    Ok(())
}

fn compare(a: CompareArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let algorithms = a
        .algorithms
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse::<Algorithm>)
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::usage)?;
    if algorithms.is_empty() {
        return Err(Failure::usage("no algorithms given"));
    }
    let inst = load_problem(&a.problem).map_err(Failure::classify)?;
    if let Some(dir) = &a.trace_dir {
        std::fs::create_dir_all(dir).map_err(Failure::usage)?;
    }
    let _ = writeln!(
        out,
        "{:<12} {:>8} {:>24} {:>24} {:>15}",
        "algorithm", "iters", "objective", "gap_bound", "stop_reason"
    );
    let mut failed = None;
    for algorithm in algorithms {
        match run(&inst.ensemble, &options(algorithm, &a.run)) {
            Ok(report) => {
                if let Some(dir) = &a.trace_dir {
                    let path = trace_path(dir, algorithm);
                    write_trace(&report, path).map_err(Failure::usage)?;
                }
                let _ = writeln!(
                    out,
                    "{:<12} {:>8} {:>24.16e} {:>24.16e} {:>15}",
                    algorithm.name(),
                    report.iterations,
                    report.last_record().objective_at_rho,
                    report.final_certificate(),
                    report.stop_reason.to_string()
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{:<12} failed: {e}", algorithm.name());
                failed.get_or_insert(Failure::classify(e));
            }
        }
    }
    failed.map_or(Ok(()), Err)
}

fn trace_path(dir: &Path, algorithm: Algorithm) -> PathBuf {
    dir.join(format!("{}.csv", algorithm.name()))
}

fn portfolio(a: PortfolioArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&a.returns).map_err(Failure::usage)?;
    let rows = parse_returns_csv(&text).map_err(Failure::usage)?;
    let prob = portfolio_from_returns(&rows, None).map_err(Failure::usage)?;
    let report = run_cover(&prob, a.max_iters, a.tol, a.max_iters).map_err(Failure::classify)?;
    let last = report.records.last().expect("cover reports hold a record");
    let weights: Vec<String> = report.x.entries().iter().map(|x| format!("{x:.12}")).collect();
    let _ = writeln!(out, "iterations: {}", last.k);
    let _ = writeln!(out, "weights: {}", weights.join(","));
    let _ = writeln!(out, "growth_rate: {:.17e}", -last.objective_at_x);
    let _ = writeln!(
        out,
        "certificate: {:.17e}",
        last.certificate_at_x.min(last.certificate_at_x_bar)
    );
    let _ = writeln!(out, "stop_reason: {}", report.stop_reason);
    Ok(())
}
