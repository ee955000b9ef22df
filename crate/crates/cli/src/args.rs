use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "mzi-duality",
    version,
    about = "Wave-particle duality in a lossy Mach-Zehnder interferometer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Analytic or simulated-protocol sweep over the splitting ratio, as CSV.
    Sweep(SweepArgs),
    /// One phase-scanned fringe, as CSV.
    Fringe(FringeArgs),
    /// Single-photon counting estimate of P and V, as CSV.
    Montecarlo(MonteCarloArgs),
    /// Fit loss parameters to a sweep CSV.
    Fit(FitArgs),
    /// Regenerate the curves and simulated measurements of a figure preset.
    ReproduceFigure(FigureArgs),
    /// Run the built-in invariant checks.
    Selftest,
    /// Re-run the invocation recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementArg {
    None,
    Inside,
    Outside,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ConfigArgs {
    /// JSON file with ExperimentConfig fields; flags override its values.
    #[arg(long, value_name = "PATH")]
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config_file: Option<PathBuf>,
    /// Interferometer layout: 1 = variable splitter, 2 = variable merger.
    #[arg(long = "config", value_enum)]
    pub layout: Option<LayoutArg>,
    #[arg(long, value_enum)]
    pub losses: Option<PlacementArg>,
    #[arg(long)]
    pub l1: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub q1: Option<f64>,
    #[arg(long)]
    pub q2: Option<f64>,
    #[arg(long)]
    pub v0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    Analytic,
    Protocol,
    /// Analytic evaluation after path/detector symmetrization.
    Symmetrized,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, value_enum, default_value = "analytic")]
    pub mode: SweepMode,
    /// Number of evenly spaced ratios in [0, 1].
    #[arg(long, default_value_t = 21)]
    pub grid: usize,
    #[arg(long, default_value_t = 256)]
    pub phases: usize,
    /// Relative Gaussian intensity noise for protocol sweeps.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FringeArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    #[arg(long, default_value_t = 256)]
    pub phases: usize,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MonteCarloArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated ratios.
    #[arg(long, value_delimiter = ',', default_value = "0.26,0.5,0.74")]
    pub r: Vec<f64>,
    /// Photons per phase setting and per which-way run.
    #[arg(long, default_value_t = 1_000_000)]
    pub photons: u64,
    #[arg(long, default_value_t = 32)]
    pub phases: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// Sweep CSV to fit.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// config1-inside, config1-outside, config2-inside or config2-outside.
    #[arg(long)]
    pub model: String,
    /// Comma-separated free parameters (L1, L2, V0, Q1, Q2).
    #[arg(long, value_delimiter = ',', required = true)]
    pub free: Vec<String>,
    /// Values for the fixed parameters (defaults 0, 0, 1, 1, 1).
    #[arg(long)]
    pub l1: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub q1: Option<f64>,
    #[arg(long)]
    pub q2: Option<f64>,
    #[arg(long)]
    pub v0: Option<f64>,
    /// Residual terms to use: p2, v2 or both.
    #[arg(long, value_delimiter = ',', default_value = "p2,v2")]
    pub observables: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum Figure {
    #[value(name = "2")]
    #[serde(rename = "2")]
    Two,
    #[value(name = "3")]
    #[serde(rename = "3")]
    Three,
    #[value(name = "5a")]
    #[serde(rename = "5a")]
    FiveA,
    #[value(name = "5b")]
    #[serde(rename = "5b")]
    FiveB,
    #[value(name = "6")]
    #[serde(rename = "6")]
    Six,
}

impl Figure {
    pub fn label(self) -> &'static str {
        match self {
            Figure::Two => "2",
            Figure::Three => "3",
            Figure::FiveA => "5a",
            Figure::FiveB => "5b",
            Figure::Six => "6",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Points on the analytic curves.
    #[arg(long, default_value_t = 101)]
    pub curve_grid: usize,
    /// Points in the simulated measurement series.
    #[arg(long, default_value_t = 21)]
    pub measured_grid: usize,
    #[arg(long, default_value_t = 256)]
    pub phases: usize,
    #[arg(long, default_value_t = 0.005)]
    pub noise: f64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long, value_name = "PATH")]
    pub manifest: PathBuf,
    /// Replaces the recorded output file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Replaces the recorded output directory.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sweep(_) => "sweep",
            Command::Fringe(_) => "fringe",
            Command::Montecarlo(_) => "montecarlo",
            Command::Fit(_) => "fit",
            Command::ReproduceFigure(_) => "reproduce-figure",
            Command::Selftest => "selftest",
            Command::Replay(_) => "replay",
        }
    }
}
