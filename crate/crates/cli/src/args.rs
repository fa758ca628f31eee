use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "pdxprop",
    version,
    about = "Lattice, continuum and path-decomposition propagator toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Catalan numbers, central binomials and the Catalan asymptotic form
    Count(CountArgs),
    /// Loop densities: closed form, enumeration and transfer matrix
    Density(DensityArgs),
    /// Continuum limit of u / 2 eta with extrapolation and fitted slope
    Converge(ConvergeArgs),
    /// Path decomposition identities against closed forms
    PdxVerify(PdxVerifyArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Free,
    Step,
    Delta,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expansion {
    /// Half-integer powers for a nonzero delta coupling, integer otherwise
    Auto,
    Integer,
    HalfInteger,
}

#[derive(Args, Debug, Serialize)]
pub struct OutputArgs {
    /// Write here (plus a `.manifest.json` beside it) instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Free)]
    pub model: ModelKind,
    /// Step height on x < 0
    #[arg(long = "V", default_value_t = 0.0, allow_hyphen_values = true)]
    pub potential: f64,
    /// Delta coupling
    #[arg(long = "a", default_value_t = 0.0, allow_hyphen_values = true)]
    pub coupling: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    /// Total Euclidean time
    #[arg(long = "T", default_value_t = 1.0)]
    pub time: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct CountArgs {
    /// Row to emit; repeatable
    #[arg(long = "n")]
    pub n: Vec<u64>,
    /// Inclusive range `a..b`; empty when b < a
    #[arg(long)]
    pub range: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct DensityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Half the step count; repeatable
    #[arg(long = "n", required = true)]
    pub n: Vec<u64>,
    /// Largest n enumerated by brute force
    #[arg(long, default_value_t = 12)]
    pub enumeration_bound: u64,
    /// Largest n run through the transfer matrix
    #[arg(long, default_value_t = 4096)]
    pub transfer_bound: u64,
    /// Relative agreement required for the flags
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sweep point; repeat at least twice
    #[arg(long = "n", required = true)]
    pub n: Vec<u64>,
    #[arg(long, value_enum, default_value_t = Expansion::Auto)]
    pub expansion: Expansion,
    /// Fail with exit code 1 when the extrapolated relative error exceeds this
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct PdxVerifyArgs {
    /// free, delta, or both when omitted
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Delta coupling for the delta grid
    #[arg(long = "a", default_value_t = 1.0, allow_hyphen_values = true)]
    pub coupling: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    /// Comma-separated starting points (magnitudes for the delta grid)
    #[arg(long, default_value = "0.5,1,2", allow_hyphen_values = true)]
    pub x0: String,
    /// Comma-separated end points; the free grid mirrors x0 when omitted
    #[arg(long, allow_hyphen_values = true)]
    pub x1: Option<String>,
    /// Comma-separated durations
    #[arg(long = "T", default_value = "0.5,1,2")]
    pub time: String,
    /// Override both the single- and double-integral deviation bounds
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    pub max_subdivisions: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}
