//! Curve files: one per `(algorithm, L)`, each line `snr_db,value`, rows in
//! summary order. Points without a value (an empty summary field) are skipped.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use sparse_tls::harness::{ExperimentSummary, SummaryRow};

use crate::{CliError, PlotArgs};

pub const METRICS: &[&str] = &["success_rate", "rmse", "relative_mse", "mean_time_s"];

fn metric_value(row: &SummaryRow, metric: &str) -> Option<f64> {
    match metric {
        "success_rate" => Some(row.success_rate),
        "rmse" => row.rmse,
        "relative_mse" => row.relative_mse,
        "mean_time_s" => row.mean_time_s,
        _ => None,
    }
}

pub fn curve_file_name(metric: &str, algorithm: &str, l: usize) -> String {
    format!("{metric}_{algorithm}_L{l}.csv")
}

/// Writes the curve files and returns their paths in sorted order.
pub fn cmd_plot_data(args: &PlotArgs) -> Result<Vec<PathBuf>, CliError> {
    if !METRICS.contains(&args.metric.as_str()) {
        return Err(CliError::Input(format!(
            "unknown metric `{}`; expected one of {}",
            args.metric,
            METRICS.join(", ")
        )));
    }
    let text = std::fs::read_to_string(&args.summary)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.summary.display())))?;
    let summary = ExperimentSummary::from_csv(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.summary.display())))?;

    let mut curves: BTreeMap<(String, usize), String> = BTreeMap::new();
    for row in &summary.rows {
        let body = curves.entry((row.algorithm.clone(), row.l)).or_default();
        if let Some(v) = metric_value(row, &args.metric) {
            let _ = writeln!(body, "{},{}", row.snr_db, v);
        }
    }

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    let mut written = Vec::with_capacity(curves.len());
    for ((algorithm, l), body) in curves {
        if body.is_empty() {
            eprintln!("warning: no {} values for {algorithm} at L = {l}; curve file is empty", args.metric);
        }
        let path = args.out.join(curve_file_name(&args.metric, &algorithm, l));
        std::fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}
