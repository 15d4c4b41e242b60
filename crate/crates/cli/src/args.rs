use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fkm_core::{BasisKind, WeightScheme};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "fkm", version, about = "Functional k-means for sparse longitudinal data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a long-format CSV.
    Fit(FitArgs),
    /// Label subjects with a previously fitted model.
    Predict(PredictArgs),
    /// Write a synthetic two-cluster dataset and its true labels.
    Simulate(SimulateArgs),
    /// Compare two label files (CCR and ARI).
    Evaluate(EvaluateArgs),
    /// Hausdorff distance between two sets of center curves.
    CenterDistance(CenterDistanceArgs),
    /// Choose the smoothing parameter by clustering instability.
    SelectLambda(SelectLambdaArgs),
    /// Dense noiseless k-means centers of the simulation model.
    PopulationCenters(PopulationCentersArgs),
    /// Replicated simulate-fit-score runs over a grid of cells.
    Benchmark(BenchmarkArgs),
}

fn weight_scheme(s: &str) -> Result<WeightScheme, String> {
    s.parse().map_err(|e: fkm_core::FkmError| e.to_string())
}

fn basis_kind(s: &str) -> Result<BasisKind, String> {
    s.parse().map_err(|e: fkm_core::FkmError| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Long-format CSV with one row per observation.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "id")]
    pub id_col: String,
    #[arg(long, default_value = "time")]
    pub time_col: String,
    #[arg(long, default_value = "value")]
    pub value_col: String,
    /// Lower end of the time domain (default: smallest observed time).
    #[arg(long, requires = "t_hi", allow_hyphen_values = true)]
    pub t_lo: Option<f64>,
    /// Upper end of the time domain (default: largest observed time).
    #[arg(long, requires = "t_lo", allow_hyphen_values = true)]
    pub t_hi: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, short = 'k')]
    pub k: usize,
    #[arg(long, default_value = "fourier", value_parser = basis_kind)]
    pub basis: BasisKind,
    /// Number of basis functions.
    #[arg(long, default_value_t = 15)]
    pub nbasis: usize,
    /// B-spline order (4 = cubic).
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, default_value = "subj", value_parser = weight_scheme)]
    pub weights: WeightScheme,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Smoothing parameter: one value, or one per cluster (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "0", allow_negative_numbers = true)]
    pub lambda: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Fit result JSON written by `fkm fit`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Number of subjects (even; half per cluster).
    #[arg(long)]
    pub n: usize,
    /// Expected number of observations per subject.
    #[arg(long)]
    pub ntp: u32,
    /// Measurement noise standard deviation.
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    /// Reference labels (`id,cluster`).
    #[arg(long = "true")]
    pub truth: PathBuf,
    /// Predicted labels (`id,cluster`).
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CenterDistanceArgs {
    /// Centers: a grid CSV (`t,f1,...`), a `{grid, curves}` JSON, or a fit result.
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Size of the uniform grid used when neither input carries its own.
    #[arg(long, default_value_t = fkm_core::metrics::DEFAULT_HAUSDORFF_GRID)]
    pub grid: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelectLambdaArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub candidates: Vec<f64>,
    /// Random half-splits per candidate.
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    /// Restarts per half-sample fit.
    #[arg(long, default_value_t = fkm_core::selection::DEFAULT_SELECTION_RESTARTS)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PopulationCentersArgs {
    #[arg(long, default_value_t = 10_000)]
    pub nlarge: usize,
    #[arg(long, default_value_t = 400)]
    pub grid: usize,
    #[arg(long, default_value_t = fkm_core::simulation::POPULATION_RESTARTS)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchmarkArgs {
    /// Subject counts (comma separated); every combination is one cell.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Expected observations per subject (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    pub ntp: Vec<u32>,
    /// Noise standard deviations (comma separated).
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub sigma: Vec<f64>,
    #[arg(long, default_value = "fourier", value_parser = basis_kind)]
    pub basis: BasisKind,
    #[arg(long, default_value_t = 15)]
    pub nbasis: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 100)]
    pub restarts: usize,
    /// Simulated datasets per cell.
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Population centers grid CSV; adds a Hausdorff column.
    #[arg(long)]
    pub population: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}
