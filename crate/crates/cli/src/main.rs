//! `sbci`: solve, generate, compare and audit runs from the shell.
//!
//! Exit status: 0 on success, 2 when a solver does not converge, 1 for
//! usage, parse and I/O errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sbci_core::config::{Preset, SolverConfig};
use sbci_core::davidson::{davidson_solve, DavidsonConfig};
use sbci_core::diagnostics::{energy_conservation_report, read_trace, write_trace, Method, RunSummary};
use sbci_core::fci::{as_operator, enumerate_basis, read_fcidump, spin_squared, DeterminantBasis};
use sbci_core::linalg::mtx::{read_matrix_market_file, write_matrix_market_file};
use sbci_core::linalg::synthetic::{gen_synthetic_ci_matrix, SyntheticParams};
use sbci_core::linalg::SymmetricLinearOperator;
use sbci_core::run::SolverRun;
use sbci_core::sbci1::solve_n_states_sbci1;
use sbci_core::sbci2::solve_n_states_sbci2;
use sbci_core::Error;

#[derive(Parser, Debug)]
#[command(name = "sbci", version, about = "Classical-dynamics eigensolvers for CI matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lowest eigenpairs of a Matrix Market file or an FCIDUMP Hamiltonian.
    Solve(SolveArgs),
    /// Seeded synthetic matrix in Matrix Market format.
    Gen(GenArgs),
    /// Runs SBCI1, SBCI2 and Davidson on the same input.
    Compare(CompareArgs),
    /// Energy-conservation report from a trace CSV.
    Conserve(ConserveArgs),
}

#[derive(Args, Debug, Clone)]
struct InputArgs {
    /// Symmetric matrix in Matrix Market coordinate format.
    #[arg(long, conflicts_with = "fcidump")]
    input: Option<PathBuf>,
    /// FCIDUMP integral file.
    #[arg(long)]
    fcidump: Option<PathBuf>,
    /// Twice S_z; overrides the FCIDUMP header.
    #[arg(long, requires = "fcidump", allow_negative_numbers = true)]
    ms2: Option<i64>,
}

#[derive(Args, Debug, Clone)]
struct TuningArgs {
    #[arg(long, default_value_t = 1)]
    nroots: usize,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// JSON object with any `SolverConfig` fields; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    b_th: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    x_th1: Option<f64>,
    #[arg(long)]
    x_th2: Option<f64>,
    #[arg(long)]
    r1: Option<f64>,
    #[arg(long)]
    max_cycle: Option<usize>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    clamp_delta: Option<f64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Sbci1)]
    method: MethodArg,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Trace CSV destination.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Summary JSON destination (also printed to stdout).
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.02)]
    density: f64,
    #[arg(long, default_value_t = 1.0)]
    gap: f64,
    /// Force the lowest gap to this value.
    #[arg(long)]
    split: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tuning: TuningArgs,
    /// JSON destination for the three summaries.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConserveArgs {
    /// Trace CSV written by `solve --trace`.
    #[arg(long)]
    trace: PathBuf,
    /// Only rows of this state.
    #[arg(long)]
    state: Option<usize>,
    /// Full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Sbci1,
    Sbci2,
    Davidson,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sbci1 => Method::Sbci1,
            MethodArg::Sbci2 => Method::Sbci2,
            MethodArg::Davidson => Method::Davidson,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetArg {
    Tight,
    Loose,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Tight => Preset::Tight,
            PresetArg::Loose => Preset::Loose,
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::NotConverged { .. } | Error::DavidsonNotConverged { .. }) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn file_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Builds a fresh operator on demand so each run counts its own matvecs.
enum Problem {
    Matrix(sbci_core::linalg::SparseSymmetric),
    Fci {
        problem: sbci_core::fci::FciProblem,
        basis: DeterminantBasis,
    },
}

impl Problem {
    fn load(input: &InputArgs) -> CliResult<Self> {
        match (&input.input, &input.fcidump) {
            (Some(path), None) => Ok(Problem::Matrix(read_matrix_market_file(path)?)),
            (None, Some(path)) => {
                let mut problem = read_fcidump(path)?;
                if let Some(ms2) = input.ms2 {
                    problem = problem.with_ms2(ms2)?;
                }
                let (na, nb) = problem.electrons()?;
                let basis = enumerate_basis(problem.norb, na, nb)?;
                Ok(Problem::Fci { problem, basis })
            }
            _ => Err(CliError::Usage("exactly one of --input or --fcidump is required".into())),
        }
    }

    fn operator(&self) -> CliResult<SymmetricLinearOperator> {
        Ok(match self {
            Problem::Matrix(m) => SymmetricLinearOperator::from_sparse(m.clone()),
            Problem::Fci { problem, basis } => as_operator(problem, basis)?,
        })
    }

    fn summarize(&self, run: &SolverRun, wall: std::time::Duration) -> RunSummary {
        let summary = RunSummary::from_run(run, wall);
        match self {
            Problem::Matrix(_) => summary,
            Problem::Fci { basis, .. } => {
                summary.with_spin_squared(run.eigenpairs.iter().map(|p| spin_squared(basis, &p.vector)).collect())
            }
        }
    }
}

fn solver_config(t: &TuningArgs, method: Method) -> CliResult<SolverConfig> {
    let mut cfg = match &t.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| file_error(path, e))?;
            serde_json::from_str(&text).map_err(|e| file_error(path, e))?
        }
        None if method == Method::Sbci2 => SolverConfig::sbci2(),
        None => SolverConfig::sbci1(),
    };
    if let Some(p) = t.preset {
        cfg = cfg.with_preset(p.into());
    }
    macro_rules! apply {
        ($($field:ident),*) => {
            $(if let Some(v) = t.$field { cfg.$field = v; })*
        };
    }
    apply!(eps0, r0, b_th, eps1, x_th1, x_th2, r1, max_cycle, t_max, clamp_delta);
    cfg.validate()?;
    Ok(cfg)
}

fn run_method(problem: &Problem, method: Method, t: &TuningArgs) -> CliResult<(SolverRun, RunSummary)> {
    let cfg = solver_config(t, method)?;
    let op = problem.operator()?;
    let start = Instant::now();
    let run = match method {
        Method::Sbci1 => solve_n_states_sbci1(&op, t.nroots, &cfg)?,
        Method::Sbci2 => solve_n_states_sbci2(&op, t.nroots, &cfg)?,
        Method::Davidson => davidson_solve(&op, None, &DavidsonConfig::from_solver(t.nroots, &cfg))?,
    };
    let summary = problem.summarize(&run, start.elapsed());
    Ok((run, summary))
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| file_error(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| file_error(path, e))
}

fn print_json(value: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn solve(args: SolveArgs) -> CliResult<()> {
    let problem = Problem::load(&args.input)?;
    let (run, summary) = run_method(&problem, args.method.into(), &args.tuning)?;
    if let Some(path) = &args.trace {
        write_trace(path, &run.trace)?;
    }
    if let Some(path) = &args.summary {
        write_json(path, &summary)?;
    }
    print_json(&summary);
    Ok(())
}

fn gen(args: GenArgs) -> CliResult<()> {
    let mut params = SyntheticParams::new(args.n, args.seed, args.density);
    params.gap = args.gap;
    if let Some(s) = args.split {
        params = params.with_split(s);
    }
    let m = gen_synthetic_ci_matrix(&params)?;
    write_matrix_market_file(&m, &args.out)?;
    Ok(())
}

fn compare(args: CompareArgs) -> CliResult<()> {
    let problem = Problem::load(&args.input)?;
    let summaries = [Method::Sbci1, Method::Sbci2, Method::Davidson]
        .into_iter()
        .map(|m| run_method(&problem, m, &args.tuning).map(|(_, s)| s))
        .collect::<CliResult<Vec<_>>>()?;

    println!("{:>6} {:>22} {:>22} {:>22}", "state", "sbci1", "sbci2", "davidson");
    for k in 0..args.tuning.nroots {
        println!(
            "{k:>6} {:>22.14} {:>22.14} {:>22.14}",
            summaries[0].energies[k], summaries[1].energies[k], summaries[2].energies[k]
        );
    }
    let row = |label: &str, f: &dyn Fn(&RunSummary) -> String| {
        println!("{label:>6} {:>22} {:>22} {:>22}", f(&summaries[0]), f(&summaries[1]), f(&summaries[2]));
    };
    row("iter", &|s| s.iterations.to_string());
    row("matvec", &|s| s.matvecs.to_string());
    row("vecs", &|s| s.peak_vectors.to_string());
    row("time", &|s| format!("{:.4} s", s.wall_time_s));
    let spread = (0..args.tuning.nroots)
        .map(|k| {
            let es = summaries.iter().map(|s| s.energies[k]);
            es.clone().fold(f64::NEG_INFINITY, f64::max) - es.fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    println!("max spread {spread:.3e}");
    if let Some(path) = &args.summary {
        write_json(path, &summaries)?;
    }
    Ok(())
}

fn conserve(args: ConserveArgs) -> CliResult<()> {
    let rows: Vec<_> = read_trace(&args.trace)?
        .into_iter()
        .filter(|r| args.state.is_none_or(|s| r.state == s))
        .collect();
    let rep = energy_conservation_report(&rows);
    println!("{:>5} {:>7} {:>5} {:>12} {:>12} {:>10} {:>10}", "state", "segment", "s", "dE", "rhs", "dev", "dev_adj");
    for s in &rep.steps {
        println!(
            "{:>5} {:>7} {:>5} {:>12.4e} {:>12.4e} {:>10.4} {:>10.4}{}",
            s.state,
            s.segment,
            s.s,
            s.delta_e,
            s.rhs,
            s.dev,
            s.dev_adjacent,
            if s.scored { "" } else { "  (not scored)" }
        );
    }
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |m| format!("{m:.4}"));
    for seg in &rep.segments {
        println!(
            "state {} segment {}: {} steps, median dev {}, adjacent {}, {}",
            seg.state,
            seg.segment,
            seg.steps,
            fmt(seg.median_dev),
            fmt(seg.median_dev_adjacent),
            if seg.pass { "pass" } else { "fail" }
        );
    }
    if let Some(n) = &rep.notice {
        println!("notice: {n}");
    }
    println!(
        "median dev {} (threshold {}, project choice): {}",
        fmt(rep.median_dev),
        rep.threshold,
        if rep.pass { "pass" } else { "fail" }
    );
    if let Some(path) = &args.json {
        write_json(path, &rep)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Gen(a) => gen(a),
        Command::Compare(a) => compare(a),
        Command::Conserve(a) => conserve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
