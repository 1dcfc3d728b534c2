use std::time::Instant;

use rayon::prelude::*;

use super::metrics::{amplitude_rmse, refit_on_support, relative_mse, support_success, top_support};
use super::problem::{generate_problem, RmseMode, TrialConfig};
use crate::error::{Error, Result};
use crate::registry::{Problem, Registry};

pub const SUMMARY_HEADER: &str = "algorithm,snr_db,L,trials,successes,success_rate,rmse,relative_mse,mean_time_s";

/// Aggregates for one `(algorithm, snr_db, L)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub snr_db: f64,
    pub l: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Root of the mean per-trial squared amplitude error over the support,
    /// successful trials only.
    pub rmse: Option<f64>,
    /// Mean of `‖X̂ − X‖_F² / ‖X‖_F²` over all trials; a failed solve counts as
    /// `X̂ = 0`.
    pub relative_mse: Option<f64>,
    pub mean_time_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentSummary {
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    success: bool,
    sq_amp_err: f64,
    rel_mse: f64,
    seconds: f64,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt(field: &str, line: usize, name: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_field(field, line, name).map(Some)
    }
}

fn parse_field<T: std::str::FromStr>(field: &str, line: usize, name: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::InvalidParam(format!("line {line}: bad {name} value `{field}`")))
}

impl ExperimentSummary {
    pub fn find(&self, algorithm: &str, snr_db: f64, l: usize) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm && r.snr_db == snr_db && r.l == l)
    }

    /// CSV text with [`SUMMARY_HEADER`]. With `include_timing = false` the
    /// `mean_time_s` column is left empty, which makes the output a pure
    /// function of config and seed.
    pub fn to_csv(&self, include_timing: bool) -> String {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(SUMMARY_HEADER.split(',')).expect("in-memory write");
        for r in &self.rows {
            let time = if include_timing { fmt_opt(r.mean_time_s) } else { String::new() };
            w.write_record([
                r.algorithm.clone(),
                r.snr_db.to_string(),
                r.l.to_string(),
                r.trials.to_string(),
                r.successes.to_string(),
                r.success_rate.to_string(),
                fmt_opt(r.rmse),
                fmt_opt(r.relative_mse),
                time,
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| Error::InvalidParam(format!("summary header: {e}")))?;
        if header.iter().collect::<Vec<_>>().join(",") != SUMMARY_HEADER {
            return Err(Error::InvalidParam(format!("line 1: expected header `{SUMMARY_HEADER}`")));
        }
        let mut rows = Vec::new();
        for (idx, rec) in rdr.records().enumerate() {
            let line = idx + 2;
            let rec = rec.map_err(|e| Error::InvalidParam(format!("line {line}: {e}")))?;
            rows.push(SummaryRow {
                algorithm: rec[0].to_string(),
                snr_db: parse_field(&rec[1], line, "snr_db")?,
                l: parse_field(&rec[2], line, "L")?,
                trials: parse_field(&rec[3], line, "trials")?,
                successes: parse_field(&rec[4], line, "successes")?,
                success_rate: parse_field(&rec[5], line, "success_rate")?,
                rmse: parse_opt(&rec[6], line, "rmse")?,
                relative_mse: parse_opt(&rec[7], line, "relative_mse")?,
                mean_time_s: parse_opt(&rec[8], line, "mean_time_s")?,
            });
        }
        Ok(Self { rows })
    }
}

fn run_trial(cfg: &TrialConfig, index: u64, registry: &Registry) -> Result<Vec<Outcome>> {
    let inst = generate_problem(cfg, index)?;
    let params = cfg.solver_params();
    let problem = Problem::new(&inst.a, &inst.y).with_sparsity(cfg.s);
    let mut out = Vec::with_capacity(cfg.algorithms.len());
    for name in &cfg.algorithms {
        let solver = registry.get(name)?;
        let start = Instant::now();
        let solved = solver.solve(&problem, &params);
        let mut seconds = start.elapsed().as_secs_f64();
        // Solvers are deterministic, so repeats only refine the timing.
        for _ in 1..cfg.timing_repeats {
            let start = Instant::now();
            let _ = solver.solve(&problem, &params);
            seconds = seconds.min(start.elapsed().as_secs_f64());
        }
        let outcome = match solved {
            Ok(res) if res.x_hat.iter().all(|v| v.is_finite()) => {
                let success = support_success(&res.x_hat, &inst.support, cfg.s);
                let sq_amp_err = if !success {
                    0.0
                } else if cfg.rmse == RmseMode::Refit {
                    let detected = top_support(&res.x_hat, cfg.s);
                    match refit_on_support(&inst.a, &inst.y, &detected) {
                        Ok(refit) => amplitude_rmse(&refit, &inst.x_true, &inst.support).powi(2),
                        Err(_) => amplitude_rmse(&res.x_hat, &inst.x_true, &inst.support).powi(2),
                    }
                } else {
                    amplitude_rmse(&res.x_hat, &inst.x_true, &inst.support).powi(2)
                };
                Outcome { success, sq_amp_err, rel_mse: relative_mse(&res.x_hat, &inst.x_true)?, seconds }
            }
            _ => Outcome { success: false, sq_amp_err: 0.0, rel_mse: 1.0, seconds },
        };
        out.push(outcome);
    }
    Ok(out)
}

/// Runs every trial of one sweep point. Trials execute in parallel on the
/// current rayon pool; aggregation follows trial order, so the summary does
/// not depend on the thread count.
pub fn run_config(cfg: &TrialConfig, registry: &Registry) -> Result<Vec<SummaryRow>> {
    cfg.validate()?;
    for name in &cfg.algorithms {
        let solver = registry.get(name)?;
        if cfg.l > 1 && !solver.supports_mmv() {
            return Err(Error::InvalidParam(format!("{name} does not accept L = {}", cfg.l)));
        }
    }
    let per_trial: Vec<Vec<Outcome>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, t, registry))
        .collect::<Result<_>>()?;

    let n = cfg.trials as f64;
    let rows = cfg
        .algorithms
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let outcomes = per_trial.iter().map(|o| o[k]);
            let successes = outcomes.clone().filter(|o| o.success).count();
            let sq: f64 = outcomes.clone().filter(|o| o.success).map(|o| o.sq_amp_err).sum();
            let rel: f64 = outcomes.clone().map(|o| o.rel_mse).sum();
            let time: f64 = outcomes.map(|o| o.seconds).sum();
            SummaryRow {
                algorithm: registry.get(name).map(|s| s.name().to_string()).unwrap_or_else(|_| name.clone()),
                snr_db: cfg.snr_db,
                l: cfg.l,
                trials: cfg.trials,
                successes,
                success_rate: successes as f64 / n,
                rmse: (successes > 0).then(|| (sq / successes as f64).sqrt()),
                relative_mse: Some(rel / n),
                mean_time_s: Some(time / n),
            }
        })
        .collect();
    Ok(rows)
}

/// Runs each sweep point in turn; rows come out in config order, then
/// algorithm order.
pub fn run_monte_carlo(configs: &[TrialConfig], registry: &Registry) -> Result<ExperimentSummary> {
    let mut rows = Vec::new();
    for cfg in configs {
        rows.extend(run_config(cfg, registry)?);
    }
    Ok(ExperimentSummary { rows })
}
