use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::params::SolverParams;

/// Generator contract recorded in run manifests. Changing any part of it
/// changes every generated instance.
pub const PRNG_ID: &str = "chacha20/rand_chacha-0.9: key=seed_from_u64(seed), stream=trial_index; \
normals=rand_distr-0.5 StandardNormal; draw order A, support, amplitudes, E, e";

/// Noise level handed to the solvers when the data are noise-free, so that
/// the ridge constant stays positive.
pub const NOISE_FREE_SIGMA: f64 = 1e-6;

/// How nonzero amplitudes are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum AmplitudeMode {
    /// i.i.d. standard normal, then power-normalized.
    Gaussian,
    /// All ones, then power-normalized.
    Constant,
    /// Exactly these values (one per support entry), not normalized.
    Explicit(Vec<f64>),
}

/// Which amplitudes the RMSE metric scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmseMode {
    /// The solver's own estimate on the support.
    Raw,
    /// Least-squares refit on the detected support against the clean dictionary.
    Refit,
}

/// One point of an experiment sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub m: usize,
    pub n: usize,
    pub s: usize,
    /// Number of measurement vectors.
    pub l: usize,
    /// `f64::INFINITY` means noise-free.
    pub snr_db: f64,
    pub amplitude: AmplitudeMode,
    /// Fixed 0-based support; drawn per trial when `None`.
    pub support: Option<Vec<usize>>,
    pub p: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub algorithms: Vec<String>,
    pub seed: u64,
    pub trials: usize,
    pub rmse: RmseMode,
    /// Each solver call is timed as the fastest of this many identical runs.
    pub timing_repeats: usize,
}

impl TrialConfig {
    /// Defaults: `p = 0.5`, `ε = 0.01`, 100 iterations, Gaussian
    /// amplitudes, one measurement vector.
    pub fn new(m: usize, n: usize, s: usize, snr_db: f64) -> Self {
        Self {
            m,
            n,
            s,
            l: 1,
            snr_db,
            amplitude: AmplitudeMode::Gaussian,
            support: None,
            p: crate::params::DEFAULT_P,
            epsilon: crate::params::DEFAULT_EPSILON,
            max_iter: crate::params::DEFAULT_MAX_ITER,
            algorithms: Vec::new(),
            seed: 0,
            trials: 1,
            rmse: RmseMode::Raw,
            timing_repeats: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParam(msg));
        if !(self.s <= self.m && self.m < self.n) {
            return bad(format!("need s <= m < n, got s={}, m={}, n={}", self.s, self.m, self.n));
        }
        if self.s == 0 || self.l == 0 || self.trials == 0 || self.timing_repeats == 0 {
            return bad("s, L, trials and timing_repeats must all be >= 1".into());
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return bad(format!("snr_db must be finite or +inf, got {}", self.snr_db));
        }
        if let AmplitudeMode::Explicit(v) = &self.amplitude {
            if v.len() != self.s {
                return bad(format!("{} explicit amplitudes given for s={}", v.len(), self.s));
            }
        }
        if let Some(t) = &self.support {
            let mut sorted = t.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != self.s || t.len() != self.s {
                return bad(format!("fixed support must list {} distinct indices", self.s));
            }
            if sorted.last().is_some_and(|&i| i >= self.n) {
                return bad(format!("support index out of range for n={}", self.n));
            }
        }
        SolverParams::with_sigma(self.p, 1.0).epsilon(self.epsilon).max_iter(self.max_iter).validate()
    }

    /// Per-entry noise standard deviation, `σ = 10^(−snr/20)` (0 when noise-free).
    pub fn noise_sigma(&self) -> f64 {
        if self.snr_db.is_infinite() {
            0.0
        } else {
            10f64.powf(-self.snr_db / 20.0)
        }
    }

    /// Solver parameters for this point; both noise levels equal `σ`, floored
    /// at [`NOISE_FREE_SIGMA`].
    pub fn solver_params(&self) -> SolverParams {
        let sigma = self.noise_sigma().max(NOISE_FREE_SIGMA);
        SolverParams::with_sigma(self.p, sigma).epsilon(self.epsilon).max_iter(self.max_iter)
    }
}

/// Ground truth and observations for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    /// Clean dictionary.
    pub a: DMatrix<f64>,
    /// Dictionary perturbation.
    pub e: DMatrix<f64>,
    /// Measurement noise, `m × L`.
    pub noise: DMatrix<f64>,
    /// `n × L`, zero off the support rows.
    pub x_true: DMatrix<f64>,
    /// Sorted, 0-based.
    pub support: Vec<usize>,
    /// `(A + E) X + noise`.
    pub y: DMatrix<f64>,
}

/// Random stream for `trial_index` under master `seed`. Streams are disjoint,
/// so results do not depend on the order trials run in.
pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

fn normals(rng: &mut ChaCha20Rng, r: usize, c: usize) -> DMatrix<f64> {
    // Row-major draw order keeps the stream layout independent of storage order.
    let vals: Vec<f64> = (0..r * c).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_row_slice(r, c, &vals)
}

/// Draws the instance for `trial_index`; deterministic in `(cfg.seed, trial_index)`.
///
/// Every column of `X` has unit power except in explicit-amplitude mode. Noise
/// entries of `[e, E]` are i.i.d. `N(0, σ²)` with `σ² = 10^(−snr/10)`.
pub fn generate_problem(cfg: &TrialConfig, trial_index: u64) -> Result<ProblemInstance> {
    cfg.validate()?;
    let (m, n, s, l) = (cfg.m, cfg.n, cfg.s, cfg.l);
    let mut rng = trial_rng(cfg.seed, trial_index);

    let a = normals(&mut rng, m, n);
    let mut support = match &cfg.support {
        Some(t) => t.clone(),
        None => rand::seq::index::sample(&mut rng, n, s).into_vec(),
    };

    let mut x_true = DMatrix::zeros(n, l);
    let amps: DMatrix<f64> = match &cfg.amplitude {
        AmplitudeMode::Gaussian => normals(&mut rng, s, l),
        AmplitudeMode::Constant => DMatrix::from_element(s, l, 1.0),
        AmplitudeMode::Explicit(v) => DMatrix::from_fn(s, l, |i, _| v[i]),
    };
    for (k, &row) in support.iter().enumerate() {
        x_true.set_row(row, &amps.row(k));
    }
    if !matches!(cfg.amplitude, AmplitudeMode::Explicit(_)) {
        for mut col in x_true.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            }
        }
    }
    support.sort_unstable();

    let sigma = cfg.noise_sigma();
    let e = normals(&mut rng, m, n) * sigma;
    let noise = normals(&mut rng, m, l) * sigma;
    let y = (&a + &e) * &x_true + &noise;
    Ok(ProblemInstance { a, e, noise, x_true, support, y })
}

impl ProblemInstance {
    pub fn y_vec(&self) -> DVector<f64> {
        self.y.column(0).into_owned()
    }
}
