use std::time::Duration;

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};

pub const DEFAULT_P: f64 = 0.5;
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_MAX_ITER: usize = 100;

/// Scale of the generalized-Gaussian prior on the signal entries,
/// `β = 2^(-p/2) Γ(1/p) / Γ(3/p)`.
pub fn prior_beta(p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(2f64.powf(-p / 2.0) * gamma_fn(1.0 / p) / gamma_fn(3.0 / p))
}

/// Sparsity weight `γ = σ²/β^p` and the matching ridge constant `α = pγ/2`.
pub fn derive_gamma_alpha(sigma: f64, p: f64) -> Result<(f64, f64)> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParam(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    let beta = prior_beta(p)?;
    let gamma = sigma * sigma / beta.powf(p);
    Ok((gamma, p * gamma / 2.0))
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam(format!("norm factor p must lie in (0, 1], got {p}")))
    }
}

/// Solver configuration shared by every algorithm in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// Norm factor of the ℓp penalty.
    pub p: f64,
    /// Measurement-noise standard deviation.
    pub sigma1: f64,
    /// Dictionary-noise standard deviation.
    pub sigma2: f64,
    /// Threshold on `‖x_k − x_{k−1}‖² / ‖x_{k−1}‖²`.
    pub epsilon: f64,
    pub max_iter: usize,
    /// Residual tolerance for inner eigen/linear solves.
    pub inner_tol: f64,
}

impl SolverParams {
    /// Defaults: ε = 0.01, 100 outer iterations, inner tolerance ε/100.
    pub fn new(p: f64, sigma1: f64, sigma2: f64) -> Self {
        Self {
            p,
            sigma1,
            sigma2,
            epsilon: DEFAULT_EPSILON,
            max_iter: DEFAULT_MAX_ITER,
            inner_tol: DEFAULT_EPSILON / 100.0,
        }
    }

    /// Equal noise levels in `e` and `E`.
    pub fn with_sigma(p: f64, sigma: f64) -> Self {
        Self::new(p, sigma, sigma)
    }

    /// Sets ε and resets the inner tolerance to ε/100.
    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self.inner_tol = epsilon / 100.0;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn inner_tol(mut self, inner_tol: f64) -> Self {
        self.inner_tol = inner_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_p(self.p)?;
        for (name, v) in [("sigma1", self.sigma1), ("sigma2", self.sigma2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParam(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParam(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParam("max_iter must be >= 1".into()));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::InvalidParam(format!("inner_tol must be > 0, got {}", self.inner_tol)));
        }
        Ok(())
    }

    /// `γ = σ₁²/β^p`.
    pub fn gamma(&self) -> Result<f64> {
        derive_gamma_alpha(self.sigma1, self.p).map(|(g, _)| g)
    }

    /// `α = pγ/2`.
    pub fn alpha(&self) -> Result<f64> {
        derive_gamma_alpha(self.sigma1, self.p).map(|(_, a)| a)
    }
}

/// Output of one solver call.
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Recovered signal, `n × L` (a single column for one measurement vector).
    pub x_hat: DMatrix<f64>,
    pub iterations: usize,
    /// Objective after each iterate, starting with the initial point.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub wall_time: Duration,
    /// Final dictionary-perturbation estimate, for solvers that form one.
    pub perturbation: Option<DMatrix<f64>>,
    /// Lagrange multiplier of the final eigen step, for TLS-FOCUSS.
    pub lagrange_multiplier: Option<f64>,
}

impl SolveResult {
    pub(crate) fn new(x_hat: DMatrix<f64>) -> Self {
        Self {
            x_hat,
            iterations: 0,
            objective_trace: Vec::new(),
            converged: false,
            wall_time: Duration::ZERO,
            perturbation: None,
            lagrange_multiplier: None,
        }
    }

    /// First column of `x_hat`.
    pub fn x(&self) -> DVector<f64> {
        self.x_hat.column(0).into_owned()
    }
}

/// `‖cur − prev‖² / ‖prev‖²` (Frobenius for matrices). Both zero gives 0.
pub(crate) fn relative_change(cur: &[f64], prev: &[f64]) -> f64 {
    let num: f64 = cur.iter().zip(prev).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = prev.iter().map(|v| v * v).sum();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// `Σ |v_i|^p`.
pub(crate) fn lp_sum(v: impl IntoIterator<Item = f64>, p: f64) -> f64 {
    v.into_iter().map(|t| t.abs().powf(p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_alpha_at_p_one() {
        let beta = prior_beta(1.0).unwrap();
        // The Gamma routine is accurate to a few ulps, not exactly at integers.
        assert!((beta - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-14);
        let (g, a) = derive_gamma_alpha(1.0, 1.0).unwrap();
        assert!((g - 2.828_427_124_746_190).abs() < 1e-12);
        assert!((a - 1.414_213_562_373_095).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_gives_zero_weights() {
        for p in [0.25, 0.5, 1.0] {
            assert_eq!(derive_gamma_alpha(0.0, p).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn gamma_alpha_at_p_half_matches_high_precision() {
        // Reference values from a 30-digit Gamma-function evaluation.
        let beta = prior_beta(0.5).unwrap();
        assert!((beta - 0.007_007_470_127_114_288).abs() < 1e-15);
        let (g, a) = derive_gamma_alpha(0.1, 0.5).unwrap();
        assert!((g - 0.119_459_136_862_914_99).abs() < 1e-13);
        assert!((a - 0.029_864_784_215_728_748).abs() < 1e-13);
    }

    #[test]
    fn p_out_of_range_is_rejected() {
        for p in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(derive_gamma_alpha(1.0, p), Err(Error::InvalidParam(_))));
        }
    }

    #[test]
    fn params_validation() {
        assert!(SolverParams::with_sigma(0.5, 0.1).validate().is_ok());
        assert!(SolverParams::with_sigma(0.5, 0.1).max_iter(0).validate().is_err());
        assert!(SolverParams::with_sigma(0.5, 0.1).epsilon(0.0).validate().is_err());
        assert!(SolverParams::with_sigma(0.5, -1.0).validate().is_err());
        let p = SolverParams::with_sigma(0.5, 0.1).epsilon(0.02);
        assert!((p.inner_tol - 2e-4).abs() < 1e-18);
    }

    #[test]
    fn relative_change_edge_cases() {
        assert_eq!(relative_change(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!(relative_change(&[1.0], &[0.0]), f64::INFINITY);
        assert!((relative_change(&[1.1, 0.0], &[1.0, 0.0]) - 0.01).abs() < 1e-12);
    }
}
