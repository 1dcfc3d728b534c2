//! Command-line front end: single-instance solves, benchmark sweeps and
//! plot-ready curve files.
//!
//! Exit codes: 0 success, 2 input or config error, 3 degenerate solution,
//! 4 internal failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod bench;
pub mod matrix;
pub mod plot;
pub mod solve;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Io(_) | CliError::Internal(_) => 4,
        }
    }
}

impl From<sparse_tls::Error> for CliError {
    fn from(e: sparse_tls::Error) -> Self {
        use sparse_tls::Error as E;
        match e {
            E::DimensionMismatch(_) | E::InvalidParam(_) | E::UnknownSolver(_) => CliError::Input(e.to_string()),
            E::DegenerateSolution(_) => CliError::Degenerate(e.to_string()),
            E::NonConvergence { .. } | E::NotPositiveDefinite | E::RankDeficient(_) => {
                CliError::Internal(e.to_string())
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sparse-tls", version, about = "Sparse recovery under dictionary and measurement perturbation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recover a sparse signal from a dictionary and measurement file.
    Solve(SolveArgs),
    /// Run a Monte Carlo sweep described by a config file.
    #[command(visible_alias = "mmv-bench")]
    Bench(BenchArgs),
    /// Split a summary CSV into one two-column curve file per algorithm and L.
    PlotData(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Dictionary, m rows by n columns.
    #[arg(long, short = 'A')]
    pub dictionary: PathBuf,
    /// Measurements, m rows by L columns.
    #[arg(long, short = 'y')]
    pub measurements: PathBuf,
    /// focuss, reg-focuss, tls-focuss, sd-focuss or omp.
    #[arg(long, short, default_value = "tls-focuss")]
    pub algorithm: String,
    #[arg(long, default_value_t = sparse_tls::params::DEFAULT_P)]
    pub p: f64,
    /// Noise level as an SNR in dB; sets both sigmas to 10^(-snr/20).
    #[arg(long, conflicts_with_all = ["sigma", "sigma1", "sigma2"])]
    pub snr_db: Option<f64>,
    /// Common standard deviation of the measurement and dictionary noise.
    #[arg(long, conflicts_with_all = ["sigma1", "sigma2"])]
    pub sigma: Option<f64>,
    /// Measurement-noise standard deviation.
    #[arg(long)]
    pub sigma1: Option<f64>,
    /// Dictionary-noise standard deviation.
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long, default_value_t = sparse_tls::params::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = sparse_tls::params::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Sparsity level, needed by omp.
    #[arg(long, short)]
    pub sparsity: Option<usize>,
    /// Where to write the recovered signal; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Where to write the JSON run metadata. Defaults to `<output>.json`, or
    /// standard error when there is no output file.
    #[arg(long)]
    pub metadata: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub config: PathBuf,
    #[arg(long, default_value = "bench-out")]
    pub out_dir: PathBuf,
    /// Worker threads for trials; all cores when absent.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    pub summary: PathBuf,
    /// success_rate, rmse, relative_mse or mean_time_s.
    #[arg(long, default_value = "success_rate")]
    pub metric: String,
    #[arg(long, default_value = "curves")]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => solve::cmd_solve(&args),
        Command::Bench(args) => bench::cmd_bench(&args).map(|_| ()),
        Command::PlotData(args) => plot::cmd_plot_data(&args).map(|_| ()),
    }
}
