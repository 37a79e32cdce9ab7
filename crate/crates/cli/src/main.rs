mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use permlab::{Algorithm, Mode, SummationOrder};
use serde::Serialize;

/// Matrix permanents with the Ryser and BB/FG formulas, plus the rounding
/// and scaling experiments built on them.
///
/// Exit codes: 0 ok, 1 computation failed, 2 bad usage or input,
/// 3 verification failed.
#[derive(Parser)]
#[command(name = "perm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the permanent of a matrix file.
    Compute(ComputeArgs),
    /// Run both formulas and compare (exit 3 when they disagree).
    Verify(VerifyArgs),
    /// Write a generated matrix in the text format.
    Gen(GenArgs),
    /// Rounding-error experiments.
    #[command(subcommand)]
    Precision(PrecisionCommand),
    /// Time the parallel engine over a list of worker counts.
    Bench(BenchArgs),
    /// Fit T = a * N^2 * 2^N * n^b to timing samples.
    Fit(FitArgs),
    /// Predict a run time from a scaling model.
    Predict(PredictArgs),
}

#[derive(Subcommand)]
enum PrecisionCommand {
    /// Error against r^n * n! on all-r matrices.
    Sweep(SweepArgs),
    /// Ryser error under the four summation orders on all-one matrices.
    Orders(OrdersArgs),
    /// Ryser vs BB/FG on one matrix or a family of seeded matrices.
    Doublecheck(DoublecheckArgs),
}

#[derive(Args, Serialize)]
pub struct RunArgs {
    /// naive, ryser, bbfg or exact.
    #[arg(long, default_value = "bbfg")]
    pub algo: Algorithm,
    /// faithful (reference operation order) or graycode (incremental).
    #[arg(long, default_value = "graycode")]
    pub mode: Mode,
    /// original, merge, separate, compensated or random:SEED.
    #[arg(long, default_value = "original")]
    pub order: SummationOrder,
    /// Worker threads (default: all available cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Pair each Ryser subset with its complement.
    #[arg(long)]
    pub balance: bool,
    /// Split every worker's range into two classes at this fraction.
    #[arg(long)]
    pub ratio: Option<f64>,
}

#[derive(Args, Serialize)]
pub struct ComputeArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value = "original")]
    pub order: SummationOrder,
    /// Largest acceptable relative difference.
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Allone,
    Allr,
    Allc,
    Diag1i,
    Haar,
    Derived,
    Special,
}

/// A generated matrix family.
#[derive(Args, Clone, Serialize)]
pub struct Source {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Matrix size.
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub family: Family,
}

/// Parameters of the families; each has a default.
#[derive(Args, Clone, Serialize)]
pub struct Family {
    /// Entry value for allr, real part for allc.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub r: f64,
    /// Imaginary part for allc.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub im: f64,
    /// Seed of the random base matrix (haar, derived, special).
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Size of the base matrix for derived.
    #[arg(long, default_value_t = 100)]
    pub base_n: usize,
    /// Seed of the row/column selection for derived.
    #[arg(long, default_value_t = 1)]
    pub selection_seed: u64,
}

#[derive(Args, Serialize)]
pub struct GenArgs {
    #[command(flatten)]
    pub source: Source,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
pub struct SweepArgs {
    /// Formulas to run, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "ryser,bbfg")]
    pub algo: Vec<Algorithm>,
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    #[arg(long, default_value_t = 20)]
    pub n_max: usize,
    /// Entry values, comma separated: 1, -0.5, 1+1i, 2i.
    #[arg(long, value_delimiter = ',', default_value = "1", allow_hyphen_values = true)]
    pub r: Vec<String>,
    #[arg(long, default_value = "original")]
    pub order: SummationOrder,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Serialize)]
pub struct OrdersArgs {
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    #[arg(long, default_value_t = 20)]
    pub n_max: usize,
    /// Seed of the random order.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Serialize)]
pub struct DoublecheckArgs {
    /// Matrix file; otherwise --kind and --n describe a family.
    #[arg(long, conflicts_with_all = ["kind", "n"])]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum, requires = "n", required_unless_present = "matrix")]
    pub kind: Option<Kind>,
    #[arg(long, requires = "kind")]
    pub n: Option<usize>,
    #[command(flatten)]
    pub family: Family,
    /// Number of seeded cases (seeds --seed, --seed + 1, ...).
    #[arg(long, default_value_t = 1)]
    pub cases: u64,
    #[arg(long, default_value = "original")]
    pub order: SummationOrder,
    #[arg(long, default_value_t = 1e-6)]
    pub threshold: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Serialize)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value = "bbfg")]
    pub algo: Algorithm,
    #[arg(long, default_value = "graycode")]
    pub mode: Mode,
    #[arg(long, default_value = "original")]
    pub order: SummationOrder,
    #[arg(long)]
    pub balance: bool,
    /// Worker counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub workers: Vec<usize>,
    /// Repetitions per worker count; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Slow down one worker: WORKER:FACTOR.
    #[arg(long)]
    pub straggler: Option<String>,
    /// Write nodes,size,seconds rows for `perm fit`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bundled {
    /// BB/FG on hybrid nodes, sizes 24..40.
    BbfgHybrid,
    /// Ryser on CPU-only nodes.
    RyserCpu,
}

#[derive(Args, Serialize)]
pub struct DataArgs {
    /// CSV with columns nodes,size,seconds.
    #[arg(long, conflicts_with = "bundled")]
    pub data: Option<PathBuf>,
    /// One of the datasets shipped with the tool.
    #[arg(long, value_enum)]
    pub bundled: Option<Bundled>,
}

#[derive(Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Serialize)]
pub struct PredictArgs {
    #[arg(long, requires = "b", allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, requires = "a", allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Fit the model from timing data instead of giving --a/--b.
    #[command(flatten)]
    pub data: DataArgs,
    /// Matrix size N.
    #[arg(long)]
    pub n_size: u32,
    /// Worker count n.
    #[arg(long)]
    pub workers: u32,
    #[arg(long)]
    pub json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compute(a) => commands::compute(a),
        Command::Verify(a) => commands::verify(a),
        Command::Gen(a) => commands::gen(a),
        Command::Precision(PrecisionCommand::Sweep(a)) => commands::sweep(a),
        Command::Precision(PrecisionCommand::Orders(a)) => commands::orders(a),
        Command::Precision(PrecisionCommand::Doublecheck(a)) => commands::doublecheck(a),
        Command::Bench(a) => commands::bench(a),
        Command::Fit(a) => commands::fit(a),
        Command::Predict(a) => commands::predict(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("perm: {e}");
            e.exit_code()
        }
    }
}
