//! `singcubic run` executes one experiment and writes its trace;
//! `singcubic compare` aligns several traces on the effective-epoch axis.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use singcubic::experiment::{run_experiment, ExperimentConfig, ExperimentError};
use singcubic::trace::{compare_runs, parse_trace_csv};
use singcubic::Termination;

#[derive(Parser)]
#[command(name = "singcubic", version, about = "Incremental cubic-regularized Newton benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimizer and write its per-iteration trace as CSV.
    Run(Box<RunArgs>),
    /// Align trace files by effective epoch and report each run's best objective.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// key = value file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// LIBSVM file, optionally gzip-compressed.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long, value_name = "libsvm")]
    format: Option<String>,
    /// Label mapping such as "-1:0,1:1"; inferred when omitted.
    #[arg(long, allow_hyphen_values = true)]
    labels: Option<String>,
    /// Feature dimension override.
    #[arg(long)]
    dim: Option<String>,
    /// Scale every feature column by its largest absolute value.
    #[arg(long)]
    scale_features: bool,
    /// convex | nonconvex | quadratic
    #[arg(long)]
    problem: Option<String>,
    /// Penalty weight (default 1e-3).
    #[arg(long)]
    alpha: Option<String>,
    /// Nonconvex penalty shape (default 1).
    #[arg(long)]
    beta: Option<String>,
    /// Number of components of the synthetic quadratic.
    #[arg(long)]
    n: Option<String>,
    /// Dimension of the synthetic quadratic.
    #[arg(long)]
    p: Option<String>,
    /// singcubic | scr | tr | sgd | saga
    #[arg(long)]
    algo: Option<String>,
    /// Effective-epoch budget.
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    batch_frac: Option<String>,
    #[arg(long)]
    sigma0: Option<String>,
    /// Step size for sgd and saga.
    #[arg(long)]
    lr: Option<String>,
    /// Gradient and Hessian sample fraction for scr.
    #[arg(long)]
    sample_frac: Option<String>,
    /// Per-iteration sample growth factor for scr.
    #[arg(long)]
    sample_growth: Option<String>,
    /// cyclic | random
    #[arg(long)]
    sampling: Option<String>,
    /// Secular tolerance of the cubic subproblem solver.
    #[arg(long)]
    eps_tol: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Trace destination; the trace goes to stdout when omitted.
    #[arg(long)]
    out: Option<String>,
    /// Record wall-clock seconds in the trace (makes it non-reproducible).
    #[arg(long)]
    timing: bool,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut kv: Vec<(&'static str, String)> = [
            ("dataset", &self.dataset),
            ("format", &self.format),
            ("labels", &self.labels),
            ("dim", &self.dim),
            ("problem", &self.problem),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("n", &self.n),
            ("p", &self.p),
            ("algo", &self.algo),
            ("epochs", &self.epochs),
            ("batch-frac", &self.batch_frac),
            ("sigma0", &self.sigma0),
            ("lr", &self.lr),
            ("sample-frac", &self.sample_frac),
            ("sample-growth", &self.sample_growth),
            ("sampling", &self.sampling),
            ("eps-tol", &self.eps_tol),
            ("seed", &self.seed),
            ("out", &self.out),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
        .collect();
        if self.scale_features {
            kv.push(("scale-features", "true".into()));
        }
        if self.timing {
            kv.push(("timing", "true".into()));
        }
        kv
    }
}

#[derive(Args)]
struct CompareArgs {
    /// Trace files written by `singcubic run`.
    #[arg(required = true, num_args = 2..)]
    traces: Vec<PathBuf>,
    /// Grid spacing in effective epochs.
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    /// Table destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

const USAGE: u8 = 2;
const FAILURE: u8 = 1;

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn run(args: RunArgs) -> ExitCode {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(USAGE, format!("{}: {e}", path.display())),
        };
        if let Err(e) = cfg.apply_file_text(&text) {
            return fail(USAGE, format!("{}: {e}", path.display()));
        }
    }
    for (k, v) in args.overrides() {
        if let Err(e) = cfg.set(k, &v) {
            return fail(USAGE, format!("--{k}: {e}"));
        }
    }
    let outcome = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(ExperimentError::Config(e)) => return fail(USAGE, e),
        Err(e) => return fail(FAILURE, e),
    };
    if cfg.out.is_some() {
        println!("{}", outcome.summary);
    } else {
        print!("{}", outcome.csv);
        eprintln!("{}", outcome.summary);
    }
    match outcome.run.termination {
        Termination::Diverged(why) => fail(FAILURE, format!("run diverged: {why}")),
        _ => ExitCode::SUCCESS,
    }
}

fn compare(args: CompareArgs) -> ExitCode {
    if !(args.step > 0.0) {
        return fail(USAGE, "--step must be positive");
    }
    let mut runs = Vec::with_capacity(args.traces.len());
    for path in &args.traces {
        let name = path.display().to_string();
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(FAILURE, format!("{name}: {e}")),
        };
        match parse_trace_csv(&text, &name) {
            Ok(points) => runs.push((name, points)),
            Err(e) => return fail(FAILURE, e),
        }
    }
    let table = compare_runs(&runs, args.step).to_table();
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, table) {
                return fail(FAILURE, format!("{}: {e}", path.display()));
            }
        }
        None => print!("{table}"),
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run(*args),
        Command::Compare(args) => compare(args),
    }
}
