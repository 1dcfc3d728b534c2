//! FOCUSS-family baselines: standard (pseudoinverse) FOCUSS, regularized
//! FOCUSS, and their multiple-measurement-vector forms.
//!
//! Every variant iterates `x_k = W_k · b_k` where `W_k` is built from the
//! previous iterate and `b_k` solves a (regularized) least-norm problem in
//! the weighted dictionary `A·W_k`. A coordinate whose weight hits zero stays
//! zero for the rest of the run.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::linalg::{min_norm_solution, min_norm_solution_mmv, SpdFactor};
use crate::params::{lp_sum, relative_change, SolveResult, SolverParams};

/// Diagonal of the FOCUSS weight matrix, `W[i][i] = |x_prev[i]|^(1 − p/2)`.
pub fn reweight_matrix(x_prev: &DVector<f64>, p: f64) -> DVector<f64> {
    let e = 1.0 - p / 2.0;
    x_prev.map(|v| v.abs().powf(e))
}

/// Row ℓ2 norms `c[i] = (Σ_l X[i][l]²)^(1/2)`.
pub fn row_norms(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(x.nrows(), x.row_iter().map(|r| r.norm()))
}

/// Diagonal of the row-sparsity weight matrix, `W[i][i] = c[i]^(1 − p/2)`.
pub fn mmv_weights(x_prev: &DMatrix<f64>, p: f64) -> DVector<f64> {
    let e = 1.0 - p / 2.0;
    row_norms(x_prev).map(|c| c.powf(e))
}

/// `‖y − Ax‖² + γ Σ|x_i|^p`.
pub fn focuss_objective(a: &DMatrix<f64>, y: &DVector<f64>, x: &DVector<f64>, gamma: f64, p: f64) -> f64 {
    (y - a * x).norm_squared() + gamma * lp_sum(x.iter().copied(), p)
}

/// `‖Y − AX‖_F² + γ Σ_i c_i^p` with `c` the row norms of `X`.
pub fn mmv_focuss_objective(a: &DMatrix<f64>, y: &DMatrix<f64>, x: &DMatrix<f64>, gamma: f64, p: f64) -> f64 {
    (y - a * x).norm_squared() + gamma * lp_sum(row_norms(x).iter().copied(), p)
}

pub(crate) fn scale_columns(a: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut out = a.clone();
    for (mut col, &wj) in out.column_iter_mut().zip(w.iter()) {
        col *= wj;
    }
    out
}

/// `W (AW)ᵀ (AW(AW)ᵀ + αI)⁻¹ y` for a single measurement vector.
pub(crate) fn ridge_step_vec(a: &DMatrix<f64>, w: &DVector<f64>, y: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
    let aw = scale_columns(a, w);
    let mut gram = &aw * aw.transpose();
    for i in 0..gram.nrows() {
        gram[(i, i)] += alpha;
    }
    let s = SpdFactor::new(gram)?.solve_vec(y)?;
    Ok(aw.tr_mul(&s).component_mul(w))
}

/// Matrix form of [`ridge_step_vec`].
pub(crate) fn ridge_step_mat(a: &DMatrix<f64>, w: &DVector<f64>, y: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    weighted_ridge_mat(&scale_columns(a, w), w, y, alpha)
}

/// [`ridge_step_mat`] with the weighted dictionary `AW` already formed.
pub(crate) fn weighted_ridge_mat(aw: &DMatrix<f64>, w: &DVector<f64>, y: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    let mut gram = aw * aw.transpose();
    for i in 0..gram.nrows() {
        gram[(i, i)] += alpha;
    }
    let s = SpdFactor::new(gram)?.solve(y)?;
    let mut x = aw.tr_mul(&s);
    for (mut row, &wi) in x.row_iter_mut().zip(w.iter()) {
        row *= wi;
    }
    Ok(x)
}

/// `W (AW)⁺ Y` through a truncated SVD of `AW`.
fn pinv_step(a: &DMatrix<f64>, w: &DVector<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let aw = scale_columns(a, w);
    let svd = SVD::new(aw, true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return Err(Error::RankDeficient("weighted dictionary A·W is zero".into()));
    }
    let cutoff = smax * f64::EPSILON * a.nrows().max(a.ncols()) as f64;
    let b = svd.solve(y, cutoff).map_err(|e| Error::RankDeficient(e.to_string()))?;
    let mut x = b;
    for (mut row, &wi) in x.row_iter_mut().zip(w.iter()) {
        row *= wi;
    }
    Ok(x)
}

/// One step of a reweighted iteration.
pub(crate) struct Step<T> {
    pub x: T,
    pub objective: f64,
}

/// Drives `step` from `x0` until the relative change drops below ε or the
/// iteration cap is hit.
pub(crate) fn run_reweighted<T, S>(
    x0: T,
    objective0: f64,
    params: &SolverParams,
    as_slice: fn(&T) -> &[f64],
    mut step: S,
) -> Result<(T, SolveResult)>
where
    S: FnMut(&T) -> Result<Step<T>>,
{
    let mut result = SolveResult::new(DMatrix::zeros(0, 0));
    result.objective_trace.push(objective0);
    let mut prev = x0;
    for k in 1..=params.max_iter {
        let next = step(&prev)?;
        let change = relative_change(as_slice(&next.x), as_slice(&prev));
        result.objective_trace.push(next.objective);
        result.iterations = k;
        prev = next.x;
        if change < params.epsilon {
            result.converged = true;
            break;
        }
    }
    Ok((prev, result))
}

fn vec_slice(v: &DVector<f64>) -> &[f64] {
    v.as_slice()
}

fn mat_slice(m: &DMatrix<f64>) -> &[f64] {
    m.as_slice()
}

pub(crate) fn check_dims(a: &DMatrix<f64>, rows: usize, x0_rows: Option<usize>) -> Result<()> {
    if a.nrows() != rows {
        return Err(Error::DimensionMismatch(format!(
            "dictionary has {} rows, measurements have {rows}",
            a.nrows()
        )));
    }
    if let Some(r) = x0_rows {
        if r != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "initial point has length {r}, dictionary has {} columns",
                a.ncols()
            )));
        }
    }
    Ok(())
}

/// Resolves the starting point; `Ok(None)` means the data are all-zero and
/// the zero vector is returned as is.
pub(crate) fn start_vec(a: &DMatrix<f64>, y: &DVector<f64>, x0: Option<&DVector<f64>>) -> Result<Option<DVector<f64>>> {
    check_dims(a, y.len(), x0.map(|x| x.len()))?;
    if y.iter().all(|&v| v == 0.0) {
        return Ok(None);
    }
    match x0 {
        Some(x) if x.iter().all(|&v| v == 0.0) => {
            Err(Error::InvalidParam("all-zero initial point cannot be reweighted".into()))
        }
        Some(x) => Ok(Some(x.clone())),
        None => min_norm_solution(a, y).map(Some),
    }
}

pub(crate) fn start_mat(a: &DMatrix<f64>, y: &DMatrix<f64>, x0: Option<&DMatrix<f64>>) -> Result<Option<DMatrix<f64>>> {
    check_dims(a, y.nrows(), x0.map(|x| x.nrows()))?;
    if let Some(x) = x0 {
        if x.ncols() != y.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "initial point has {} columns, measurements have {}",
                x.ncols(),
                y.ncols()
            )));
        }
    }
    if y.iter().all(|&v| v == 0.0) {
        return Ok(None);
    }
    match x0 {
        Some(x) if x.iter().all(|&v| v == 0.0) => {
            Err(Error::InvalidParam("all-zero initial point cannot be reweighted".into()))
        }
        Some(x) => Ok(Some(x.clone())),
        None => min_norm_solution_mmv(a, y).map(Some),
    }
}

pub(crate) fn zero_result(n: usize, l: usize, objective: f64, started: Instant) -> SolveResult {
    let mut r = SolveResult::new(DMatrix::zeros(n, l));
    r.iterations = 1;
    r.converged = true;
    r.objective_trace = vec![objective, objective];
    r.wall_time = started.elapsed();
    r
}

fn require_alpha(params: &SolverParams) -> Result<f64> {
    params.validate()?;
    let alpha = params.alpha()?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParam(
            "regularized FOCUSS needs α > 0; use a positive noise level".into(),
        ));
    }
    Ok(alpha)
}

/// Regularized FOCUSS: `x_k = W_k A_kᵀ (A_k A_kᵀ + αI)⁻¹ y` with `A_k = A·W_k`.
///
/// Starts from the minimum-norm solution when `x0` is `None`. The objective
/// trace records `‖y − Ax_k‖² + γ‖x_k‖_p^p`.
pub fn regularized_focuss(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    params: &SolverParams,
    x0: Option<&DVector<f64>>,
) -> Result<SolveResult> {
    let started = Instant::now();
    let alpha = require_alpha(params)?;
    let gamma = params.gamma()?;
    let p = params.p;
    let Some(x0) = start_vec(a, y, x0)? else {
        return Ok(zero_result(a.ncols(), 1, 0.0, started));
    };
    let obj0 = focuss_objective(a, y, &x0, gamma, p);
    let (x, mut result) = run_reweighted(x0, obj0, params, vec_slice, |prev| {
        let w = reweight_matrix(prev, p);
        let x = ridge_step_vec(a, &w, y, alpha)?;
        let objective = focuss_objective(a, y, &x, gamma, p);
        Ok(Step { x, objective })
    })?;
    result.x_hat = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
    result.wall_time = started.elapsed();
    Ok(result)
}

/// Standard FOCUSS: `x_k = W_k (A W_k)⁺ y`.
///
/// The trace records the diversity measure `Σ|x_k[i]|^p`.
pub fn standard_focuss(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    params: &SolverParams,
    x0: Option<&DVector<f64>>,
) -> Result<SolveResult> {
    let started = Instant::now();
    params.validate()?;
    let p = params.p;
    let Some(x0) = start_vec(a, y, x0)? else {
        return Ok(zero_result(a.ncols(), 1, 0.0, started));
    };
    let y_mat = DMatrix::from_column_slice(y.len(), 1, y.as_slice());
    let obj0 = lp_sum(x0.iter().copied(), p);
    let (x, mut result) = run_reweighted(x0, obj0, params, vec_slice, |prev| {
        let w = reweight_matrix(prev, p);
        let x = pinv_step(a, &w, &y_mat)?.column(0).into_owned();
        let objective = lp_sum(x.iter().copied(), p);
        Ok(Step { x, objective })
    })?;
    result.x_hat = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
    result.wall_time = started.elapsed();
    Ok(result)
}

/// Regularized MMV FOCUSS with row-norm weights.
pub fn mmv_regularized_focuss(
    a: &DMatrix<f64>,
    y: &DMatrix<f64>,
    params: &SolverParams,
    x0: Option<&DMatrix<f64>>,
) -> Result<SolveResult> {
    let started = Instant::now();
    let alpha = require_alpha(params)?;
    let gamma = params.gamma()?;
    let p = params.p;
    let Some(x0) = start_mat(a, y, x0)? else {
        return Ok(zero_result(a.ncols(), y.ncols(), 0.0, started));
    };
    let obj0 = mmv_focuss_objective(a, y, &x0, gamma, p);
    let (x, mut result) = run_reweighted(x0, obj0, params, mat_slice, |prev| {
        let w = mmv_weights(prev, p);
        let x = ridge_step_mat(a, &w, y, alpha)?;
        let objective = mmv_focuss_objective(a, y, &x, gamma, p);
        Ok(Step { x, objective })
    })?;
    result.x_hat = x;
    result.wall_time = started.elapsed();
    Ok(result)
}

/// MMV FOCUSS: `X_k = W_k (A W_k)⁺ Y` with row-norm weights.
pub fn mmv_standard_focuss(
    a: &DMatrix<f64>,
    y: &DMatrix<f64>,
    params: &SolverParams,
    x0: Option<&DMatrix<f64>>,
) -> Result<SolveResult> {
    let started = Instant::now();
    params.validate()?;
    let p = params.p;
    let Some(x0) = start_mat(a, y, x0)? else {
        return Ok(zero_result(a.ncols(), y.ncols(), 0.0, started));
    };
    let obj0 = lp_sum(row_norms(&x0).iter().copied(), p);
    let (x, mut result) = run_reweighted(x0, obj0, params, mat_slice, |prev| {
        let w = mmv_weights(prev, p);
        let x = pinv_step(a, &w, y)?;
        let objective = lp_sum(row_norms(&x).iter().copied(), p);
        Ok(Step { x, objective })
    })?;
    result.x_hat = x;
    result.wall_time = started.elapsed();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
    }

    fn planted(rng: &mut ChaCha8Rng, m: usize, n: usize, support: &[usize], vals: &[f64]) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
        let a = gaussian(rng, m, n);
        let mut x = DVector::zeros(n);
        for (&i, &v) in support.iter().zip(vals) {
            x[i] = v;
        }
        let y = &a * &x;
        (a, x, y)
    }

    fn top_support(x: &DVector<f64>, s: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j)));
        let mut t = idx[..s].to_vec();
        t.sort();
        t
    }

    #[test]
    fn reweight_examples() {
        let w = reweight_matrix(&DVector::from_vec(vec![1.0, 1.0, 1.0]), 0.5);
        assert_eq!(w.as_slice(), &[1.0, 1.0, 1.0]);
        let w = reweight_matrix(&DVector::from_vec(vec![0.0, 2.0]), 1.0);
        assert_eq!(w[0], 0.0);
        assert!((w[1] - 2f64.sqrt()).abs() < 1e-15);
        let w = reweight_matrix(&DVector::from_vec(vec![-3.0, 0.5]), 0.5);
        assert!((w[0] - 2.279_507_056_954_777_6).abs() < 1e-14);
        assert!((w[1] - 0.594_603_557_501_360_5).abs() < 1e-14);
    }

    #[test]
    fn mmv_weights_examples() {
        let x = DMatrix::from_row_slice(3, 2, &[3.0, 4.0, 0.0, 0.0, -1.0, 0.0]);
        let w = mmv_weights(&x, 0.5);
        assert!((w[0] - 5f64.powf(0.75)).abs() < 1e-14);
        assert_eq!(w[1], 0.0);
        assert!((w[2] - 1.0).abs() < 1e-15);
        let v = DVector::from_vec(vec![-3.0, 0.5, 0.0]);
        let m = DMatrix::from_column_slice(3, 1, v.as_slice());
        assert_eq!(mmv_weights(&m, 0.7), reweight_matrix(&v, 0.7));
    }

    proptest! {
        #[test]
        fn reweight_scales_homogeneously(
            xs in proptest::collection::vec(-10.0f64..10.0, 1..12),
            c in 0.01f64..100.0,
            p in 0.05f64..=1.0,
        ) {
            let x = DVector::from_vec(xs);
            let w = reweight_matrix(&x, p);
            let wc = reweight_matrix(&(&x * c), p);
            let k = c.powf(1.0 - p / 2.0);
            for (a, b) in wc.iter().zip(w.iter()) {
                prop_assert!((a - k * b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn regularized_recovers_noise_free_planted() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (a, x, y) = planted(&mut rng, 10, 20, &[4, 13], &[1.0, -0.8]);
        // Checks the fixed point, so iterate well past the default stopping rule.
        let params = SolverParams::with_sigma(0.5, 1e-6).epsilon(1e-12);
        let r = regularized_focuss(&a, &y, &params, None).unwrap();
        assert!(r.converged);
        assert!((r.x() - &x).amax() < 1e-4, "{}", (r.x() - &x).amax());
        assert_eq!(top_support(&r.x(), 2), vec![4, 13]);
    }

    #[test]
    fn zero_data_gives_zero_in_one_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let a = gaussian(&mut rng, 5, 8);
        let y = DVector::zeros(5);
        let params = SolverParams::with_sigma(0.5, 0.1);
        for r in [
            regularized_focuss(&a, &y, &params, None).unwrap(),
            standard_focuss(&a, &y, &params, None).unwrap(),
        ] {
            assert_eq!(r.iterations, 1);
            assert!(r.converged);
            assert!(r.x_hat.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn all_zero_start_is_rejected() {
        let a = DMatrix::identity(3, 3);
        let y = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let x0 = DVector::zeros(3);
        let params = SolverParams::with_sigma(0.5, 0.1);
        assert!(matches!(regularized_focuss(&a, &y, &params, Some(&x0)), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn regularized_needs_positive_alpha() {
        let a = DMatrix::identity(2, 2);
        let y = DVector::from_vec(vec![1.0, 2.0]);
        let params = SolverParams::with_sigma(0.5, 0.0);
        assert!(matches!(regularized_focuss(&a, &y, &params, None), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn standard_identity_is_fixed_point() {
        let y = DVector::from_vec(vec![0.3, -1.2, 2.0, 0.7]);
        let params = SolverParams::with_sigma(0.5, 0.0);
        let r = standard_focuss(&DMatrix::identity(4, 4), &y, &params, Some(&y)).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
        assert!((r.x() - &y).amax() < 1e-14);
    }

    #[test]
    fn standard_recovers_noise_free_planted() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let (a, x, y) = planted(&mut rng, 10, 20, &[2, 17], &[0.9, 0.6]);
            let params = SolverParams::with_sigma(0.5, 0.0).epsilon(1e-12);
            let r = standard_focuss(&a, &y, &params, None).unwrap();
            assert_eq!(top_support(&r.x(), 2), vec![2, 17]);
            assert!((r.x() - &x).amax() < 1e-3);
            // Feasible iterates: the diversity measure decreases.
            for w in r.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{:?}", r.objective_trace);
            }
        }
    }

    #[test]
    fn regularized_objective_descends() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..50 {
            let a = gaussian(&mut rng, 20, 30);
            let y = DVector::from_fn(20, |_, _| rng.sample::<f64, _>(StandardNormal));
            let params = SolverParams::with_sigma(0.5, 0.2).epsilon(1e-8).max_iter(60);
            let r = regularized_focuss(&a, &y, &params, None).unwrap();
            for w in r.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn zero_coordinates_stay_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let a = gaussian(&mut rng, 6, 10);
        let y = DVector::from_fn(6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut x0 = min_norm_solution(&a, &y).unwrap();
        x0[3] = 0.0;
        x0[7] = 0.0;
        let params = SolverParams::with_sigma(0.5, 0.1).max_iter(5);
        for r in [
            regularized_focuss(&a, &y, &params, Some(&x0)).unwrap(),
            standard_focuss(&a, &y, &params, Some(&x0)).unwrap(),
        ] {
            assert_eq!(r.x_hat[(3, 0)], 0.0);
            assert_eq!(r.x_hat[(7, 0)], 0.0);
        }
    }

    #[test]
    fn mmv_at_one_column_matches_smv() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..10 {
            let a = gaussian(&mut rng, 12, 25);
            let y = DVector::from_fn(12, |_, _| rng.sample::<f64, _>(StandardNormal));
            let ym = DMatrix::from_column_slice(12, 1, y.as_slice());
            let params = SolverParams::with_sigma(0.5, 0.3);
            let smv = regularized_focuss(&a, &y, &params, None).unwrap();
            let mmv = mmv_regularized_focuss(&a, &ym, &params, None).unwrap();
            assert_eq!(smv.iterations, mmv.iterations);
            assert!((smv.x_hat - mmv.x_hat).amax() <= 1e-12);
            let smv = standard_focuss(&a, &y, &params, None).unwrap();
            let mmv = mmv_standard_focuss(&a, &ym, &params, None).unwrap();
            assert!((smv.x_hat - mmv.x_hat).amax() <= 1e-12);
        }
    }

    #[test]
    fn mmv_recovers_planted_row_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let a = gaussian(&mut rng, 10, 20);
        let mut x = DMatrix::zeros(20, 3);
        for l in 0..3 {
            x[(5, l)] = rng.sample::<f64, _>(StandardNormal);
            x[(11, l)] = rng.sample::<f64, _>(StandardNormal);
        }
        let y = &a * &x;
        let params = SolverParams::with_sigma(0.5, 1e-6);
        for r in [
            mmv_regularized_focuss(&a, &y, &params, None).unwrap(),
            mmv_standard_focuss(&a, &y, &params, None).unwrap(),
        ] {
            assert_eq!(top_support(&row_norms(&r.x_hat), 2), vec![5, 11]);
        }
    }
}
