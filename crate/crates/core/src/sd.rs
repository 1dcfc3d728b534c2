//! SD-FOCUSS: estimates the dictionary perturbation `E` and the sparse signal
//! together, one pass per iteration.
//!
//! With `c = σ₁²/σ₂²` the objective is
//!
//! ```text
//! J(x, E) = ‖y − (A+E)x‖² + c‖E‖_F² + γ Σ|x_i|^p
//! ```
//!
//! For fixed `x` it is minimized in closed form by
//! `E(x) = (y − Ax)xᵀ / (c + xᵀx)`; for fixed `E` one regularized FOCUSS step
//! on `A + E` decreases it. Each iteration builds `W_k` and `E_k` from
//! `x_{k−1}`, then sets `x_k = W_k A_kᵀ(A_k A_kᵀ + αI)⁻¹y` with
//! `A_k = (A + E_k)W_k`.
//!
//! The MMV form replaces `|x[i]|` by row norms and `c + xᵀx` by the `L × L`
//! matrix `cI + XᵀX`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::focuss::{row_norms, run_reweighted, scale_columns, start_mat, weighted_ridge_mat, zero_result, Step};
use crate::linalg::SpdFactor;
use crate::params::{lp_sum, SolveResult, SolverParams};

pub use crate::focuss::mmv_weights;

/// Estimated dictionary perturbation and the damping constant `σ₁²/σ₂²` used
/// to form it.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbEstimate {
    pub e_hat: DMatrix<f64>,
    pub sigma_ratio_sq: f64,
}

fn sigma_ratio_sq(sigma1: f64, sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) || !(sigma1 >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "perturbation estimate needs sigma2 > 0 and sigma1 >= 0, got sigma1={sigma1}, sigma2={sigma2}"
        )));
    }
    Ok((sigma1 / sigma2).powi(2))
}

/// `E(x) = (y − Ax)xᵀ / (σ₁²/σ₂² + xᵀx)`, the minimizer of `J(x, ·)`.
pub fn estimate_e(a: &DMatrix<f64>, y: &DVector<f64>, x: &DVector<f64>, sigma1: f64, sigma2: f64) -> Result<PerturbEstimate> {
    let c = sigma_ratio_sq(sigma1, sigma2)?;
    if a.nrows() != y.len() || a.ncols() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, y has length {}, x has length {}",
            a.nrows(),
            a.ncols(),
            y.len(),
            x.len()
        )));
    }
    let denom = c + x.norm_squared();
    let e_hat = if denom == 0.0 {
        DMatrix::zeros(a.nrows(), a.ncols())
    } else {
        (y - a * x) * x.transpose() / denom
    };
    Ok(PerturbEstimate { e_hat, sigma_ratio_sq: c })
}

/// `E(X) = (Y − AX)(σ₁²/σ₂² I + XᵀX)⁻¹Xᵀ`; the inner solve is `L × L`.
pub fn mmv_estimate_e(a: &DMatrix<f64>, y: &DMatrix<f64>, x: &DMatrix<f64>, sigma1: f64, sigma2: f64) -> Result<PerturbEstimate> {
    let c = sigma_ratio_sq(sigma1, sigma2)?;
    if a.nrows() != y.nrows() || a.ncols() != x.nrows() || y.ncols() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, Y is {}x{}, X is {}x{}",
            a.nrows(),
            a.ncols(),
            y.nrows(),
            y.ncols(),
            x.nrows(),
            x.ncols()
        )));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Ok(PerturbEstimate { e_hat: DMatrix::zeros(a.nrows(), a.ncols()), sigma_ratio_sq: c });
    }
    let mut inner = x.tr_mul(x);
    for i in 0..inner.nrows() {
        inner[(i, i)] += c;
    }
    let right = SpdFactor::new(inner)?.solve(&x.transpose())?;
    Ok(PerturbEstimate { e_hat: (y - a * x) * right, sigma_ratio_sq: c })
}

/// `J(x, E) = ‖y − (A+E)x‖² + c‖E‖_F² + γ‖x‖_p^p`.
pub fn sd_objective(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    x: &DVector<f64>,
    e: &DMatrix<f64>,
    sigma_ratio_sq: f64,
    gamma: f64,
    p: f64,
) -> f64 {
    (y - (a + e) * x).norm_squared() + sigma_ratio_sq * e.norm_squared() + gamma * lp_sum(x.iter().copied(), p)
}

/// MMV objective; the penalty is `γ Σ_i c_i^p` over row norms of `X`.
pub fn mmv_sd_objective(
    a: &DMatrix<f64>,
    y: &DMatrix<f64>,
    x: &DMatrix<f64>,
    e: &DMatrix<f64>,
    sigma_ratio_sq: f64,
    gamma: f64,
    p: f64,
) -> f64 {
    (y - (a + e) * x).norm_squared()
        + sigma_ratio_sq * e.norm_squared()
        + gamma * lp_sum(row_norms(x).iter().copied(), p)
}

fn check_e0(a: &DMatrix<f64>, e0: Option<&DMatrix<f64>>) -> Result<()> {
    match e0 {
        Some(e) if e.shape() != a.shape() => Err(Error::DimensionMismatch(format!(
            "E0 is {}x{}, dictionary is {}x{}",
            e.nrows(),
            e.ncols(),
            a.nrows(),
            a.ncols()
        ))),
        _ => Ok(()),
    }
}

fn alpha_and_ratio(params: &SolverParams) -> Result<(f64, f64, f64)> {
    params.validate()?;
    let alpha = params.alpha()?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParam("SD-FOCUSS needs α > 0; use a positive noise level".into()));
    }
    Ok((params.gamma()?, alpha, sigma_ratio_sq(params.sigma1, params.sigma2)?))
}

/// SD-FOCUSS for a single measurement vector: the MMV iteration with `L = 1`.
///
/// `x0` defaults to the minimum-norm solution and `E0` to zero. The returned
/// result carries the last `E_k` in `perturbation`.
pub fn sd_focuss(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    params: &SolverParams,
    x0: Option<&DVector<f64>>,
    e0: Option<&DMatrix<f64>>,
) -> Result<SolveResult> {
    let as_col = |v: &DVector<f64>| DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    let x0 = x0.map(as_col);
    mmv_sd_focuss(a, &as_col(y), params, x0.as_ref(), e0)
}

/// `E(X) = R·M` with `R = Y − AX` and `M = (cI + XᵀX)⁻¹Xᵀ`, kept factored.
struct LowRankE {
    r: DMatrix<f64>,
    m: DMatrix<f64>,
}

impl LowRankE {
    fn estimate(a: &DMatrix<f64>, y: &DMatrix<f64>, x: &DMatrix<f64>, c: f64) -> Result<Self> {
        let r = y - a * x;
        let m = if x.iter().all(|&v| v == 0.0) {
            DMatrix::zeros(x.ncols(), x.nrows())
        } else {
            let mut inner = x.tr_mul(x);
            for i in 0..inner.nrows() {
                inner[(i, i)] += c;
            }
            SpdFactor::new(inner)?.solve(&x.transpose())?
        };
        Ok(Self { r, m })
    }

    /// `(A + E)W` without forming `E`.
    fn perturbed_weighted(&self, a: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
        let mut aw = scale_columns(a, w);
        let mw = scale_columns(&self.m, w);
        aw.gemm(1.0, &self.r, &mw, 1.0);
        aw
    }

    /// `J(X, E)` from the factors: `‖E‖_F² = tr(RᵀR · MMᵀ)`.
    fn objective(&self, a: &DMatrix<f64>, y: &DMatrix<f64>, x: &DMatrix<f64>, c: f64, gamma: f64, p: f64) -> f64 {
        let resid = y - a * x - &self.r * (&self.m * x);
        let e_norm_sq = self.r.tr_mul(&self.r).component_mul(&(&self.m * self.m.transpose())).sum();
        resid.norm_squared() + c * e_norm_sq + gamma * lp_sum(row_norms(x).iter().copied(), p)
    }

    fn dense(&self) -> DMatrix<f64> {
        &self.r * &self.m
    }
}

/// SD-FOCUSS for `L` measurement vectors sharing a row support.
///
/// `E_k` is rank `L`, so `(A + E_k)W_k` is formed as a low-rank update of
/// `AW_k` and the dense `E` is only built for the result.
pub fn mmv_sd_focuss(
    a: &DMatrix<f64>,
    y: &DMatrix<f64>,
    params: &SolverParams,
    x0: Option<&DMatrix<f64>>,
    e0: Option<&DMatrix<f64>>,
) -> Result<SolveResult> {
    let started = Instant::now();
    let (gamma, alpha, c) = alpha_and_ratio(params)?;
    let p = params.p;
    check_e0(a, e0)?;
    let Some(x0) = start_mat(a, y, x0)? else {
        let mut r = zero_result(a.ncols(), y.ncols(), 0.0, started);
        r.perturbation = Some(DMatrix::zeros(a.nrows(), a.ncols()));
        return Ok(r);
    };
    let obj0 = match e0 {
        Some(e) => mmv_sd_objective(a, y, &x0, e, c, gamma, p),
        None => (y - a * &x0).norm_squared() + gamma * lp_sum(row_norms(&x0).iter().copied(), p),
    };
    let mut last = None;
    let (x, mut result) = run_reweighted(x0, obj0, params, |v: &DMatrix<f64>| v.as_slice(), |prev| {
        let w = mmv_weights(prev, p);
        let e = LowRankE::estimate(a, y, prev, c)?;
        let x = weighted_ridge_mat(&e.perturbed_weighted(a, &w), &w, y, alpha)?;
        let objective = e.objective(a, y, &x, c, gamma, p);
        last = Some(e);
        Ok(Step { x, objective })
    })?;
    result.perturbation = last.map(|e| e.dense());
    result.x_hat = x;
    result.wall_time = started.elapsed();
    Ok(result)
}
