use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use swcoding::codec::Mode;
use swcoding::composition::DEFAULT_BUDGET;

pub const DEFAULT_SEED: u64 = 0xC0FFEE;

#[derive(Debug, Parser)]
#[command(
    name = "swcoding",
    version,
    about = "Finite-blocklength Slepian-Wolf coding: rates, bounds and simulated codes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entropies, mutual information and dispersions of a source.
    Info(InfoArgs),
    /// Rate functions of the conditional surprisal and the information density.
    Ratefn(RatefnArgs),
    /// Exact tail probabilities next to their exponential bounds.
    Tail(TailArgs),
    /// Achievability, normal-approximation and converse rate curves.
    Bounds(BoundsArgs),
    /// Build a code and measure its error.
    Simulate(SimulateArgs),
    /// Curves and measured points over a grid of block lengths and targets.
    Sweep(SweepArgs),
    /// Calibrate the code constants for a block length and error target.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Fixed,
    Variable,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fixed => Mode::Fixed,
            ModeArg::Variable => Mode::Variable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    /// Full encode/decode runs.
    MonteCarlo,
    /// Sampled pairs, binning averaged in closed form.
    SemiSampled,
    /// Exact sum over joint compositions.
    SemiExhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Achievability,
    NormalApprox,
    Measured,
    Converse,
}

/// Flags shared by every command.
#[derive(Debug, Args)]
pub struct Common {
    /// Source file: {"pmf": [[p(x,y) ...], ...]} with one row per x.
    #[arg(long)]
    pub source: PathBuf,
    /// Write data here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Show rates in bits (outputs are computed in nats).
    #[arg(long)]
    pub bits: bool,
    /// Largest enumeration the exact routines may perform.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RatefnArgs {
    #[command(flatten)]
    pub common: Common,
    /// Deviations δ >= 0.
    #[arg(long, value_delimiter = ',', required = true)]
    pub delta: Vec<f64>,
    /// Type counts for the information-density rate, e.g. 3,5.
    #[arg(long = "type", value_delimiter = ',')]
    pub type_counts: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct TailArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub delta: Vec<f64>,
    /// Type counts (summing to n) for the information-density tail.
    #[arg(long = "type", value_delimiter = ',')]
    pub type_counts: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "fixed,variable")]
    pub mode: Vec<ModeArg>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Error targets for achievability and normal-approximation curves.
    /// Converse curves always use 1/√(n ln n).
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "achievability,normal-approx,converse"
    )]
    pub kind: Vec<KindArg>,
}

#[derive(Debug, Args)]
pub struct CodeArgs {
    #[arg(long, value_enum, default_value = "fixed")]
    pub mode: ModeArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub eps: f64,
    /// Variable-rate jar-width constant (calibrated when absent).
    #[arg(long)]
    pub kappa1: Option<f64>,
    /// Variable-rate offset constant.
    #[arg(long)]
    pub kappa2: Option<f64>,
    /// Fixed-rate jar-width constant (calibrated when absent).
    #[arg(long)]
    pub kappa3: Option<f64>,
    /// Fixed-rate offset constant.
    #[arg(long)]
    pub kappa4: Option<f64>,
    /// Γ_X radius constant for variable-rate codes.
    #[arg(long)]
    pub c0: Option<f64>,
    /// Seeds both the binning and the trials.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub code: CodeArgs,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, value_enum, default_value = "monte-carlo")]
    pub estimator: EstimatorArg,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "fixed,variable")]
    pub mode: Vec<ModeArg>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Error targets; an empty value gives a header-only table.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub eps: Vec<f64>,
    /// Monte Carlo trials per measured point; 0 skips measured rows.
    #[arg(long, default_value_t = 0)]
    pub trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "achievability,normal-approx,measured,converse"
    )]
    pub kind: Vec<KindArg>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "fixed")]
    pub mode: ModeArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub eps: f64,
    /// Γ_X radius constant; calibrated when absent.
    #[arg(long)]
    pub c0: Option<f64>,
}
