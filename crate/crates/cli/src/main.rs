//! `detdiff` command-line front end.
//!
//! Exit status: 0 on success, 2 for invalid input, 3 when a numerical
//! procedure fails. Errors are printed as one line, `error[<kind>]: <message>`.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use detdiff::{ErrorKind, Method};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser)]
#[command(name = "detdiff", version, about = "Deterministic diffusion in piecewise-linear lifting maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a partition equation system for the slope and breakpoints (JSON).
    SolvePartition(SolveArgs),
    /// Diffusion coefficient by one or all methods (JSON).
    Diffusion(DiffusionArgs),
    /// Monte Carlo D over a grid of slopes for linear maps (CSV).
    Scan(ScanArgs),
    /// Evolve the lattice density from the uniform density on I0 (CSV snapshots and Kolmogorov trace).
    Evolve(EvolveArgs),
    /// Monte Carlo ensemble statistics for one map (CSV).
    Simulate(SimulateArgs),
    /// Billiard-channel variance growth (CSV).
    Billiard(BilliardArgs),
}

#[derive(Args)]
pub struct SolveArgs {
    /// Partition system JSON file.
    #[arg(long, visible_alias = "partition-system")]
    system: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
pub struct McArgs {
    /// Ensemble size.
    #[arg(long = "N", default_value_t = 100_000)]
    samples: usize,
    /// Iteration depth.
    #[arg(long = "n", default_value_t = detdiff::montecarlo::DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    ClosedForm,
    Spectral,
    Heuristic,
    Omega,
    Mc,
    All,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::ClosedForm => Method::ClosedForm,
            MethodArg::Spectral => Method::Spectral,
            MethodArg::Heuristic => Method::Heuristic,
            MethodArg::Omega => Method::Omega,
            MethodArg::Mc | MethodArg::All => Method::MonteCarlo,
        }
    }
}

#[derive(Args)]
pub struct DiffusionArgs {
    /// Map: inline JSON, a JSON file, or shorthand such as `linear lambda=2+sqrt(3)`.
    /// Defaults to the linear map of the solved `--partition-system`.
    #[arg(long, num_args = 1..)]
    map: Vec<String>,
    /// Partition system JSON; its solved partition is used for the spectral method.
    #[arg(long)]
    partition_system: Option<PathBuf>,
    /// Comma-separated breakpoints from -0.5 to 0.5, or a JSON array file.
    #[arg(long, allow_hyphen_values = true)]
    partition: Option<String>,
    #[arg(long, value_enum, default_value = "all")]
    method: MethodArg,
    #[command(flatten)]
    mc: McArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ScanArgs {
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Comma-separated slopes; surds such as 2+sqrt(3) allowed.
    #[arg(long)]
    lambda_grid: Option<String>,
    #[command(flatten)]
    mc: McArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvolveArgs {
    #[arg(long, num_args = 1..)]
    map: Vec<String>,
    #[arg(long)]
    partition_system: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    partition: Option<String>,
    /// Last step.
    #[arg(long = "n", default_value_t = 100)]
    steps: usize,
    /// Snapshot steps, comma-separated; default n/8, n/4, n/2, n.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<usize>>,
    /// Snapshot CSV; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Kolmogorov-distance trace CSV; stderr if absent.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long, num_args = 1.., required = true)]
    map: Vec<String>,
    #[command(flatten)]
    mc: McArgs,
    /// Iterate plain doubles (orbits of even slopes then collapse).
    #[arg(long)]
    no_dither: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Approximate,
    Exact,
}

#[derive(Args)]
pub struct BilliardArgs {
    #[arg(long, value_enum, default_value = "approximate")]
    model: ModelArg,
    /// Force slope of the approximate model.
    #[arg(long)]
    lambda: Option<f64>,
    /// Channel half-width of the exact model.
    #[arg(long)]
    h: Option<f64>,
    /// Wall tilt amplitude of the exact model.
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long = "N", default_value_t = 100_000)]
    samples: usize,
    #[arg(long = "n", default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Checkpoint steps, comma-separated; default n/8, n/4, n/2, n.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<usize>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("error[{kind}]: {}", message.replace('\n', " "));
    ExitCode::from(code)
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("DETDIFF_THREADS") else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("DETDIFF_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.kind().to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or(&text).trim_start_matches("error: ");
            return fail("validation", first, 2);
        }
    };
    if let Err(msg) = configure_threads() {
        return fail("validation", &msg, 2);
    }
    let result = match &cli.command {
        Command::SolvePartition(a) => commands::solve_partition(a),
        Command::Diffusion(a) => commands::diffusion(a),
        Command::Scan(a) => commands::scan(a),
        Command::Evolve(a) => commands::evolve_cmd(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Billiard(a) => commands::billiard(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => match e.kind() {
            ErrorKind::Numerical => fail("numerical", &e.to_string(), 3),
            ErrorKind::Validation => fail("validation", &e.to_string(), 2),
            ErrorKind::Io => fail("io", &e.to_string(), 2),
        },
    }
}
