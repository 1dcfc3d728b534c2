//! Seeded problem generation, recovery metrics and the Monte Carlo driver.

pub mod config;
pub mod metrics;
pub mod monte_carlo;
pub mod problem;

pub use config::{parse_sweep, ConfigError, SweepConfig};
pub use metrics::{amplitude_rmse, refit_on_support, relative_mse, support_success, top_support};
pub use monte_carlo::{run_config, run_monte_carlo, ExperimentSummary, SummaryRow, SUMMARY_HEADER};
pub use problem::{generate_problem, trial_rng, AmplitudeMode, ProblemInstance, RmseMode, TrialConfig, PRNG_ID};
