//! Sweep configuration files: one `key = value` per line, `#` starts a
//! comment, lists are comma-separated.
//!
//! ```text
//! m = 20
//! n = 30
//! s = 3
//! L = 1
//! snr_db = 10, 12, 15, 18, 20
//! amplitude = gaussian          # gaussian | constant | explicit
//! algorithms = focuss, tls-focuss, sd-focuss
//! trials = 500
//! seed = 2011
//! ```
//!
//! Optional keys: `amplitudes` (explicit values), `support` (fixed 0-based
//! indices), `p`, `epsilon`, `max_iter`, `rmse` (`raw` | `refit`),
//! `timing_repeats` (time each solver call as the fastest of this many runs).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use super::problem::{AmplitudeMode, RmseMode, TrialConfig};
use crate::params::{DEFAULT_EPSILON, DEFAULT_MAX_ITER, DEFAULT_P};

pub const DEFAULT_SEED: u64 = 2011;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// A parsed config: shared settings plus the SNR and `L` axes of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub m: usize,
    pub n: usize,
    pub s: usize,
    pub l_values: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub amplitude: AmplitudeMode,
    pub support: Option<Vec<usize>>,
    pub p: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub algorithms: Vec<String>,
    pub seed: u64,
    pub trials: usize,
    pub rmse: RmseMode,
    pub timing_repeats: usize,
}

const KEYS: &[&str] = &[
    "m", "n", "s", "L", "snr_db", "amplitude", "amplitudes", "support", "p", "epsilon", "max_iter",
    "algorithms", "seed", "trials", "rmse", "timing_repeats",
];

fn parse_scalar<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<T, ConfigError> {
    raw.trim().parse::<T>().map_err(|_| ConfigError::Line {
        line,
        message: format!("cannot parse `{raw}` as the value of `{key}`"),
    })
}

fn parse_list<T: FromStr>(key: &str, raw: &str, line: usize) -> Result<Vec<T>, ConfigError> {
    raw.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_scalar(key, t, line))
        .collect()
}

/// Parses a sweep config.
pub fn parse_sweep(text: &str) -> Result<SweepConfig, ConfigError> {
    let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Line { line, message: format!("expected `key = value`, got `{content}`") });
        };
        let key = key.trim();
        let key = if key == "l" { "L" } else { key };
        let Some(&key) = KEYS.iter().find(|&&k| k == key) else {
            return Err(ConfigError::Line { line, message: format!("unknown key `{key}`") });
        };
        if entries.insert(key, (line, value.trim())).is_some() {
            return Err(ConfigError::Line { line, message: format!("duplicate key `{key}`") });
        }
    }

    let opt = |key: &str| entries.get(key).copied();
    fn num<T: FromStr>(entry: Option<(usize, &str)>, key: &str) -> Result<Option<T>, ConfigError> {
        entry.map(|(line, v)| parse_scalar(key, v, line)).transpose()
    }
    fn list<T: FromStr>(entry: Option<(usize, &str)>, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        entry.map(|(line, v)| parse_list(key, v, line)).transpose()
    }
    let required = |key: &str| ConfigError::Invalid(format!("missing required key `{key}`"));

    // Malformed values are reported before missing keys.
    let m = num(opt("m"), "m")?;
    let n = num(opt("n"), "n")?;
    let s = num(opt("s"), "s")?;
    let trials = num(opt("trials"), "trials")?;
    let l_values = list(opt("L"), "L")?.unwrap_or_else(|| vec![1]);
    let snr_db: Option<Vec<f64>> = list(opt("snr_db"), "snr_db")?;
    let support = list(opt("support"), "support")?;
    let p = num(opt("p"), "p")?.unwrap_or(DEFAULT_P);
    let epsilon = num(opt("epsilon"), "epsilon")?.unwrap_or(DEFAULT_EPSILON);
    let max_iter = num(opt("max_iter"), "max_iter")?.unwrap_or(DEFAULT_MAX_ITER);
    let seed = num(opt("seed"), "seed")?.unwrap_or(DEFAULT_SEED);
    let timing_repeats = num(opt("timing_repeats"), "timing_repeats")?.unwrap_or(1);

    let amplitudes: Option<Vec<f64>> = list(opt("amplitudes"), "amplitudes")?;
    let amplitude = match (opt("amplitude"), amplitudes) {
        (None, None) => AmplitudeMode::Gaussian,
        (None, Some(v)) => AmplitudeMode::Explicit(v),
        (Some((line, kind)), amps) => match (kind, amps) {
            ("gaussian", None) => AmplitudeMode::Gaussian,
            ("constant", None) => AmplitudeMode::Constant,
            ("explicit", Some(v)) => AmplitudeMode::Explicit(v),
            ("explicit", None) => {
                return Err(ConfigError::Line { line, message: "explicit amplitude mode needs `amplitudes`".into() })
            }
            ("gaussian" | "constant", Some(_)) => {
                return Err(ConfigError::Line { line, message: "`amplitudes` only applies to explicit mode".into() })
            }
            (other, _) => {
                return Err(ConfigError::Line { line, message: format!("unknown amplitude mode `{other}`") })
            }
        },
    };
    let rmse = match opt("rmse") {
        None | Some((_, "raw")) => RmseMode::Raw,
        Some((_, "refit")) => RmseMode::Refit,
        Some((line, other)) => {
            return Err(ConfigError::Line { line, message: format!("rmse must be `raw` or `refit`, got `{other}`") })
        }
    };
    let algorithms: Vec<String> = opt("algorithms")
        .ok_or_else(|| required("algorithms"))?
        .1
        .split(',')
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .map(String::from)
        .collect();
    let cfg = SweepConfig {
        m: m.ok_or_else(|| required("m"))?,
        n: n.ok_or_else(|| required("n"))?,
        s: s.ok_or_else(|| required("s"))?,
        l_values,
        snr_db: snr_db.ok_or_else(|| required("snr_db"))?,
        amplitude,
        support,
        p,
        epsilon,
        max_iter,
        algorithms,
        seed,
        trials: trials.ok_or_else(|| required("trials"))?,
        rmse,
        timing_repeats,
    };
    if cfg.snr_db.is_empty() {
        return Err(ConfigError::Invalid("snr_db lists no values".into()));
    }
    if cfg.algorithms.is_empty() {
        return Err(ConfigError::Invalid("algorithms lists no names".into()));
    }
    if cfg.l_values.is_empty() {
        return Err(ConfigError::Invalid("L lists no values".into()));
    }
    for tc in cfg.expand() {
        tc.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    }
    Ok(cfg)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl SweepConfig {
    /// One [`TrialConfig`] per `(L, snr)` pair, `L` outermost.
    pub fn expand(&self) -> Vec<TrialConfig> {
        let mut out = Vec::with_capacity(self.l_values.len() * self.snr_db.len());
        for &l in &self.l_values {
            for &snr in &self.snr_db {
                out.push(TrialConfig {
                    m: self.m,
                    n: self.n,
                    s: self.s,
                    l,
                    snr_db: snr,
                    amplitude: self.amplitude.clone(),
                    support: self.support.clone(),
                    p: self.p,
                    epsilon: self.epsilon,
                    max_iter: self.max_iter,
                    algorithms: self.algorithms.clone(),
                    seed: self.seed,
                    trials: self.trials,
                    rmse: self.rmse,
                    timing_repeats: self.timing_repeats,
                });
            }
        }
        out
    }

    /// Renders the config back to the file format; parsing the result yields
    /// an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "s = {}", self.s);
        let _ = writeln!(s, "L = {}", join(&self.l_values));
        let _ = writeln!(s, "snr_db = {}", join(&self.snr_db));
        match &self.amplitude {
            AmplitudeMode::Gaussian => s.push_str("amplitude = gaussian\n"),
            AmplitudeMode::Constant => s.push_str("amplitude = constant\n"),
            AmplitudeMode::Explicit(v) => {
                s.push_str("amplitude = explicit\n");
                let _ = writeln!(s, "amplitudes = {}", join(v));
            }
        }
        if let Some(t) = &self.support {
            let _ = writeln!(s, "support = {}", join(t));
        }
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "epsilon = {}", self.epsilon);
        let _ = writeln!(s, "max_iter = {}", self.max_iter);
        let _ = writeln!(s, "algorithms = {}", self.algorithms.join(", "));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "rmse = {}", if self.rmse == RmseMode::Raw { "raw" } else { "refit" });
        let _ = writeln!(s, "timing_repeats = {}", self.timing_repeats);
        s
    }
}
