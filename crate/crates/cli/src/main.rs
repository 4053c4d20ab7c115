//! `hyperent` command-line tool.
//!
//! Exit codes: 0 success (including "hypothesis unmet", which is recorded in
//! the report), 2 input or validation error, 3 internal consistency
//! violation.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "hyperent", version, about = "Hypercontractivity and entropy contraction for finite Markov chains")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Certification tolerance on `||T||_{p->q} <= 1`.
    #[arg(long, global = true, default_value_t = hyperent::hyper::DEFAULT_CERT_TOL)]
    pub tol: f64,
    /// Random starts per optimizer, on top of the deterministic ones.
    #[arg(long, global = true, default_value_t = 32)]
    pub budget: usize,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a kernel or generator file for a named family.
    Gen(GenArgs),
    /// Norm, certificate, contraction coefficient, theorem check and proof trace for a kernel.
    Analyze(AnalyzeArgs),
    /// Continuous-time report for a generator: LSI/MLSI, schedule, decay curve, mixing.
    Semigroup(SemigroupArgs),
    /// Scan a one-parameter family and write a CSV of verdicts.
    Sweep(SweepArgs),
    /// Proof trace for one density.
    Trace(TraceArgs),
    /// Exact mixing times against the entropy bounds.
    Mixing(MixingArgs),
    /// Brute-force grid oracles for tiny instances.
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
#[value(rename_all = "snake_case")]
pub enum GenFamily {
    Projection,
    Identity,
    TwoPointNoise,
    LazyRing,
    CompleteGraph,
    RandomReversible,
    Random,
    /// Generator: two-state flip chain.
    Flip,
    /// Generator: symmetric nearest-neighbour cycle.
    Cycle,
    /// Generator: `K - I` for a random reversible kernel.
    RandomReversibleGenerator,
    /// Generator: `K - I` for a random kernel.
    RandomGenerator,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: GenFamily,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.5)]
    pub laziness: f64,
    /// Jump rate for `flip` and `cycle`.
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    /// Stationary law for `projection` and `identity`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub pi: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    pub kernel: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 4.0)]
    pub q: f64,
    /// Law whose density is traced (weights, comma separated); defaults to
    /// the contraction-coefficient witness.
    #[arg(long, value_delimiter = ',')]
    pub mu: Option<Vec<f64>>,
    /// Random laws checked on top of point masses and boundary laws.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct SemigroupArgs {
    pub generator: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0, 2.0])]
    pub times: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.1, 0.01])]
    pub eps: Vec<f64>,
    /// Initial law for the decay curve; defaults to the point mass at the
    /// least likely state.
    #[arg(long, value_delimiter = ',')]
    pub mu: Option<Vec<f64>>,
    /// Use this LSI constant instead of a certified one.
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
#[value(rename_all = "snake_case")]
pub enum SweepFamily {
    TwoPointNoise,
    LazyRing,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub family: SweepFamily,
    /// `start:stop:step`, inclusive of both ends.
    #[arg(long, default_value = "0:1:0.01")]
    pub range: String,
    /// Number of states for `lazy_ring`.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 3.0)]
    pub q: f64,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    pub kernel: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 4.0)]
    pub q: f64,
    /// Law whose density is traced (weights, comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub mu: Vec<f64>,
    /// Mix `f` with the constant at this weight when it has zeros.
    #[arg(long)]
    pub smoothing: Option<f64>,
}

#[derive(Args, Debug)]
pub struct MixingArgs {
    pub generator: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.1, 0.01])]
    pub eps: Vec<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Write the CSV table instead of JSON.
    #[arg(long)]
    pub csv: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
#[value(rename_all = "snake_case")]
pub enum OracleKind {
    Theta,
    Opnorm,
    Lsi,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Kernel file, or generator file for `lsi`.
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: OracleKind,
    #[arg(long, default_value_t = 1e-3)]
    pub resolution: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 4.0)]
    pub q: f64,
}

/// Distinguishes the two failure exit codes.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Violation(String),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Violation(witness)) => {
            eprintln!("internal consistency violation; witness:\n{witness}");
            ExitCode::from(3)
        }
    }
}
