use std::path::PathBuf;

use serde::Serialize;
use sparse_tls::harness::problem::NOISE_FREE_SIGMA;
use sparse_tls::{Problem, Registry, SolverParams};

use crate::matrix::{format_matrix, read_matrix};
use crate::{CliError, SolveArgs};

#[derive(Debug, Serialize)]
pub struct SolveMetadata {
    pub algorithm: String,
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub p: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lagrange_multiplier: Option<f64>,
}

/// Noise levels from the flags; noise-free when none is given.
fn sigmas(args: &SolveArgs) -> (f64, f64) {
    if let Some(snr) = args.snr_db {
        let s = 10f64.powf(-snr / 20.0);
        return (s, s);
    }
    if let Some(s) = args.sigma {
        return (s, s);
    }
    (args.sigma1.unwrap_or(NOISE_FREE_SIGMA), args.sigma2.unwrap_or(NOISE_FREE_SIGMA))
}

pub fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let a = read_matrix(&args.dictionary)?;
    let y = read_matrix(&args.measurements)?;
    if a.nrows() != y.nrows() {
        return Err(CliError::Input(format!(
            "{} has {} rows but {} has {}",
            args.dictionary.display(),
            a.nrows(),
            args.measurements.display(),
            y.nrows()
        )));
    }
    let registry = Registry::with_builtins();
    let solver = registry.get(&args.algorithm)?;
    let (sigma1, sigma2) = sigmas(args);
    let params = SolverParams::new(args.p, sigma1, sigma2).epsilon(args.epsilon).max_iter(args.max_iter);
    params.validate()?;
    let mut problem = Problem::new(&a, &y);
    if let Some(s) = args.sparsity {
        problem = problem.with_sparsity(s);
    }
    let res = solver.solve(&problem, &params)?;

    let meta = SolveMetadata {
        algorithm: solver.name().to_string(),
        m: a.nrows(),
        n: a.ncols(),
        l: y.ncols(),
        p: params.p,
        sigma1,
        sigma2,
        epsilon: params.epsilon,
        max_iter: params.max_iter,
        iterations: res.iterations,
        converged: res.converged,
        objective_trace: res.objective_trace.clone(),
        wall_time_s: res.wall_time.as_secs_f64(),
        lagrange_multiplier: res.lagrange_multiplier,
    };
    let meta_json = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Internal(e.to_string()))?;
    let x_text = format_matrix(&res.x_hat);

    match &args.output {
        Some(path) => {
            write(path, &x_text)?;
            let meta_path = args.metadata.clone().unwrap_or_else(|| {
                let mut p = path.clone().into_os_string();
                p.push(".json");
                PathBuf::from(p)
            });
            write(&meta_path, &meta_json)?;
        }
        None => {
            print!("{x_text}");
            match &args.metadata {
                Some(path) => write(path, &meta_json)?,
                None => eprintln!("{meta_json}"),
            }
        }
    }
    Ok(())
}

fn write(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
