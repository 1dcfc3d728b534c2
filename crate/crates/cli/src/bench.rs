use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sparse_tls::harness::{parse_sweep, run_monte_carlo, ExperimentSummary, PRNG_ID};
use sparse_tls::Registry;

use crate::{BenchArgs, CliError};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

const RMSE_NOTE: &str = "rmse: square root of the mean, over successful trials, of the mean squared \
amplitude error over the s x L support entries; relative_mse: mean over all trials of \
||X_hat - X||_F^2 / ||X||_F^2, a failed solve counting as X_hat = 0";

/// Everything needed to reproduce a sweep, plus the files it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// The effective config, seed included, in config-file syntax.
    pub config: String,
    pub tool_version: String,
    pub prng: String,
    pub timestamp: String,
    pub threads: usize,
    pub metrics: String,
    /// Paths relative to the output directory.
    pub files: Vec<String>,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Runs the sweep and writes the summary and manifest into `--out-dir`.
pub fn cmd_bench(args: &BenchArgs) -> Result<RunManifest, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.config.display())))?;
    let mut sweep =
        parse_sweep(&text).map_err(|e| CliError::Input(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        sweep.seed = seed;
    }
    let registry = Registry::with_builtins();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| CliError::Internal(e.to_string()))?;
    let summary: ExperimentSummary = pool.install(|| run_monte_carlo(&sweep.expand(), &registry))?;

    std::fs::create_dir_all(&args.out_dir).map_err(|e| io_err(&args.out_dir, e))?;
    let summary_path = args.out_dir.join(SUMMARY_FILE);
    std::fs::write(&summary_path, summary.to_csv(true)).map_err(|e| io_err(&summary_path, e))?;

    let manifest = RunManifest {
        config: sweep.to_text(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        prng: PRNG_ID.to_string(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        threads: pool.current_num_threads(),
        metrics: RMSE_NOTE.to_string(),
        files: vec![SUMMARY_FILE.to_string(), MANIFEST_FILE.to_string()],
    };
    let manifest_path: PathBuf = args.out_dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::write(&manifest_path, json).map_err(|e| io_err(&manifest_path, e))?;
    Ok(manifest)
}
