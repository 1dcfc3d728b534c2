//! TLS-FOCUSS.
//!
//! The perturbed model `y = (A+E)x + e` is rewritten on the augmented vector
//! `z' = [1; x]` as `B z' ≈ 0` with `B = [−y, A]`. On the unit sphere the MAP
//! objective becomes
//!
//! ```text
//! J(z) = ‖Bz‖² / ‖z‖² + γ Σ |z_i|^p
//! ```
//!
//! and its stationarity condition `(BᵀB + αΠ(z)) z = λ z`, with
//! `Π(z) = diag(|z_i|^(p−2))`, is relaxed into a sequence of minimum-eigenvector
//! problems. Each one is solved as the *largest* eigenvector of
//!
//! ```text
//! Φ = W² − W²Bᵀ(αI + BW²Bᵀ)⁻¹BW²,   W = diag(|z_prev,i|^(1−p/2)),
//! ```
//!
//! which equals `(BᵀB + αΠ)⁻¹ / α` on the coordinates where `W` is nonzero and
//! only needs an `m × m` factorization.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{dominant_eigenpair_from, min_norm_solution, SpdFactor, SymOperator};
use crate::params::{lp_sum, relative_change, SolveResult, SolverParams};

/// `|z[0]|` below this cannot be divided out in [`extract_x`].
pub const DEGENERATE_Z0: f64 = 1e-12;

/// `B = [−y, r·A]` together with the column scale `r = σ₁/σ₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    b: DMatrix<f64>,
    scale_ratio: f64,
}

impl AugmentedSystem {
    /// Unscaled system `B = [−y, A]`, i.e. equal noise levels.
    pub fn new(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        Self::with_ratio(a, y, 1.0)
    }

    fn with_ratio(a: &DMatrix<f64>, y: &DVector<f64>, ratio: f64) -> Result<Self> {
        if a.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "dictionary has {} rows, measurement has {}",
                a.nrows(),
                y.len()
            )));
        }
        let (m, n) = a.shape();
        let mut b = DMatrix::zeros(m, n + 1);
        b.set_column(0, &(-y));
        b.columns_mut(1, n).copy_from(&(a * ratio));
        Ok(Self { b, scale_ratio: ratio })
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn scale_ratio(&self) -> f64 {
        self.scale_ratio
    }

    pub fn m(&self) -> usize {
        self.b.nrows()
    }

    pub fn n(&self) -> usize {
        self.b.ncols() - 1
    }

    /// Unit-norm starting point `[1; u₀]/‖[1; u₀]‖` where `u₀` is the
    /// minimum-norm solution of the scaled block, so that `r·u₀ = x₀`.
    pub fn initial_z(&self) -> Result<DVector<f64>> {
        let a_block = self.b.columns(1, self.n()).into_owned();
        let y = -self.b.column(0);
        let u0 = min_norm_solution(&a_block, &y)?;
        Ok(lift_normalized(&u0))
    }
}

/// Builds the augmented system, scaling the dictionary block by `σ₁/σ₂` so
/// that `[e, E]` becomes isotropic.
pub fn build_augmented(a: &DMatrix<f64>, y: &DVector<f64>, sigma1: f64, sigma2: f64) -> Result<AugmentedSystem> {
    if !(sigma1 > 0.0 && sigma2 > 0.0) || !(sigma1 / sigma2).is_finite() {
        return Err(Error::InvalidParam(format!(
            "noise levels must be positive, got sigma1={sigma1}, sigma2={sigma2}"
        )));
    }
    AugmentedSystem::with_ratio(a, y, sigma1 / sigma2)
}

fn lift_normalized(x: &DVector<f64>) -> DVector<f64> {
    let mut z = DVector::zeros(x.len() + 1);
    z[0] = 1.0;
    z.rows_mut(1, x.len()).copy_from(x);
    z.normalize_mut();
    z
}

/// `z₀ = [1; x₀] / ‖[1; x₀]‖₂` with `x₀ = Aᵀ(AAᵀ)⁻¹y`.
pub fn initial_z(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(lift_normalized(&min_norm_solution(a, y)?))
}

/// `x[i] = r · z[i+1] / z[0]`, undoing the dictionary scaling.
pub fn extract_x(z: &DVector<f64>, scale_ratio: f64) -> Result<DVector<f64>> {
    if z.is_empty() {
        return Err(Error::DimensionMismatch("empty augmented vector".into()));
    }
    let lead = z[0];
    if !(lead.abs() >= DEGENERATE_Z0) {
        return Err(Error::DegenerateSolution(lead));
    }
    Ok(z.rows(1, z.len() - 1) * (scale_ratio / lead))
}

/// `J(z) = ‖Bz‖²/‖z‖² + γ Σ|z_i|^p`.
pub fn objective_j(z: &DVector<f64>, b: &DMatrix<f64>, gamma: f64, p: f64) -> Result<f64> {
    if z.len() != b.ncols() {
        return Err(Error::DimensionMismatch(format!("z has length {}, B has {} columns", z.len(), b.ncols())));
    }
    let nz = z.norm_squared();
    if nz == 0.0 {
        return Err(Error::InvalidParam("objective is undefined at z = 0".into()));
    }
    Ok((b * z).norm_squared() / nz + gamma * lp_sum(z.iter().copied(), p))
}

/// Implicit `Φ = W² − W²Bᵀ(αI + BW²Bᵀ)⁻¹BW²`, factorized once.
///
/// When every weight is nonzero, `Φ = α (BᵀB + αΠ)⁻¹` with `Π = W⁻²`.
pub struct PhiOperator<'a> {
    b: &'a DMatrix<f64>,
    w2: DVector<f64>,
    inner: SpdFactor,
}

impl PhiOperator<'_> {
    /// Diagonal of `W²`.
    pub fn w_squared(&self) -> &DVector<f64> {
        &self.w2
    }
}

impl SymOperator for PhiOperator<'_> {
    fn dim(&self) -> usize {
        self.w2.len()
    }

    fn apply_into(&self, v: &DVector<f64>, out: &mut DVector<f64>) {
        let t = v.component_mul(&self.w2);
        let mut s = self.b * &t;
        self.inner.solve_vec_mut(&mut s);
        self.b.tr_mul_to(&s, out);
        out.component_mul_assign(&self.w2);
        out.neg_mut();
        *out += t;
    }

    fn to_dense(&self) -> DMatrix<f64> {
        // W²Bᵀ · (αI + BW²Bᵀ)⁻¹ · BW², computed as a block rather than by columns.
        let mut bw2 = self.b.clone();
        for (mut col, &w) in bw2.column_iter_mut().zip(self.w2.iter()) {
            col *= w;
        }
        let k = self.inner.solve(&bw2).expect("inner factor matches B");
        let mut phi = -(bw2.tr_mul(&k));
        for i in 0..phi.nrows() {
            phi[(i, i)] += self.w2[i];
        }
        phi
    }
}

/// Builds `Φ` from the previous iterate. Requires `α > 0`.
pub fn phi_operator<'a>(b: &'a DMatrix<f64>, z_prev: &DVector<f64>, alpha: f64, p: f64) -> Result<PhiOperator<'a>> {
    if z_prev.len() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "z has length {}, B has {} columns",
            z_prev.len(),
            b.ncols()
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParam(format!("alpha must be > 0, got {alpha}")));
    }
    let e = 2.0 - p;
    let w2 = z_prev.map(|v| v.abs().powf(e));
    let mut bw = b.clone();
    for (mut col, &w2i) in bw.column_iter_mut().zip(w2.iter()) {
        col *= w2i.sqrt();
    }
    let mut inner = &bw * bw.transpose();
    for i in 0..inner.nrows() {
        inner[(i, i)] += alpha;
    }
    Ok(PhiOperator { b, w2, inner: SpdFactor::new(inner)? })
}

/// Runs TLS-FOCUSS from the minimum-norm starting point.
pub fn tls_focuss(system: &AugmentedSystem, params: &SolverParams) -> Result<SolveResult> {
    let z0 = system.initial_z()?;
    tls_focuss_from(system, params, &z0)
}

/// Runs TLS-FOCUSS from `z0` (normalized internally).
///
/// Each eigenvector is sign-aligned with the previous iterate so the
/// relative-change test compares like with like.
pub fn tls_focuss_from(system: &AugmentedSystem, params: &SolverParams, z0: &DVector<f64>) -> Result<SolveResult> {
    tls_focuss_observed(system, params, z0, &mut |_| {})
}

/// [`tls_focuss_from`], calling `observe` on every iterate `z_k` (including
/// the normalized start).
pub fn tls_focuss_observed(
    system: &AugmentedSystem,
    params: &SolverParams,
    z0: &DVector<f64>,
    observe: &mut dyn FnMut(&DVector<f64>),
) -> Result<SolveResult> {
    let started = Instant::now();
    params.validate()?;
    let (gamma, alpha) = (params.gamma()?, params.alpha()?);
    let p = params.p;
    let b = system.b();
    let d = b.ncols();
    if z0.len() != d {
        return Err(Error::DimensionMismatch(format!("z0 has length {}, expected {d}", z0.len())));
    }
    let mut z_prev = z0.normalize();
    if !z_prev.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParam("initial point must be finite and nonzero".into()));
    }

    let mut result = SolveResult::new(DMatrix::zeros(0, 0));
    result.objective_trace.push(objective_j(&z_prev, b, gamma, p)?);
    observe(&z_prev);
    for k in 1..=params.max_iter {
        let phi = phi_operator(b, &z_prev, alpha, p)?;
        let pair = dominant_eigenpair_from(&phi, Some(&z_prev), params.inner_tol, 10 * d)?;
        // One more application of Φ scales each entry by its weight. Without it,
        // entries whose weight has collapsed keep the eigensolver's absolute
        // rounding noise, which |z|^p turns into a visible objective increase.
        let mut z = phi.apply(&pair.vector);
        let norm = z.norm();
        if norm > 0.0 {
            z /= norm;
        } else {
            z = pair.vector;
        }
        if z.dot(&z_prev) < 0.0 {
            z.neg_mut();
        }
        result.objective_trace.push(objective_j(&z, b, gamma, p)?);
        observe(&z);
        result.lagrange_multiplier = Some(alpha / pair.value);
        result.iterations = k;
        let change = relative_change(z.as_slice(), z_prev.as_slice());
        z_prev = z;
        if change < params.epsilon {
            result.converged = true;
            break;
        }
    }
    let x = extract_x(&z_prev, system.scale_ratio())?;
    result.x_hat = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
    result.wall_time = started.elapsed();
    Ok(result)
}

/// Builds the system from `params` (σ₁/σ₂ scaling when both are positive) and
/// runs TLS-FOCUSS.
pub fn tls_focuss_solve(a: &DMatrix<f64>, y: &DVector<f64>, params: &SolverParams) -> Result<SolveResult> {
    let system = if params.sigma1 > 0.0 && params.sigma2 > 0.0 {
        build_augmented(a, y, params.sigma1, params.sigma2)?
    } else {
        AugmentedSystem::new(a, y)?
    };
    tls_focuss(&system, params)
}
