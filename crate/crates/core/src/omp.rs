//! Orthogonal matching pursuit and its simultaneous (row-sparse) variant.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::params::SolveResult;

/// Greedy recovery output.
#[derive(Debug, Clone)]
pub struct OmpResult {
    /// Selected columns in selection order.
    pub support: Vec<usize>,
    /// Coefficients, `n × L`, zero off the support.
    pub coefficients: DMatrix<f64>,
    /// `‖R‖_F²` after each selection, starting with `‖Y‖_F²`.
    pub residual_trace: Vec<f64>,
}

/// OMP with known sparsity `s`.
pub fn omp(a: &DMatrix<f64>, y: &DVector<f64>, s: usize) -> Result<OmpResult> {
    somp(a, &DMatrix::from_column_slice(y.len(), 1, y.as_slice()), s)
}

/// Simultaneous OMP: each step adds the column whose correlations with the
/// residual columns have the largest summed magnitude, then refits all
/// selected coefficients by least squares.
///
/// Stops early once the residual vanishes.
pub fn somp(a: &DMatrix<f64>, y: &DMatrix<f64>, s: usize) -> Result<OmpResult> {
    let (m, n) = a.shape();
    if y.nrows() != m {
        return Err(Error::DimensionMismatch(format!("dictionary has {m} rows, measurements have {}", y.nrows())));
    }
    if s > m || s > n {
        return Err(Error::InvalidParam(format!("sparsity {s} exceeds dictionary shape {m}x{n}")));
    }
    let col_norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let mut support: Vec<usize> = Vec::with_capacity(s);
    let mut residual = y.clone();
    let mut coef = DMatrix::zeros(0, y.ncols());
    let y_energy = y.norm_squared();
    let mut residual_trace = vec![y_energy];

    for _ in 0..s {
        if residual.norm_squared() <= 1e-28 * y_energy.max(f64::MIN_POSITIVE) {
            break;
        }
        let corr = a.tr_mul(&residual);
        let mut best: Option<(usize, f64)> = None;
        for j in (0..n).filter(|j| !support.contains(j)) {
            if col_norms[j] == 0.0 {
                continue;
            }
            let score = corr.row(j).iter().map(|v| v.abs()).sum::<f64>() / col_norms[j];
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((j, score));
            }
        }
        let Some((j, _)) = best else { break };
        support.push(j);

        let sub = a.select_columns(support.iter());
        let svd = SVD::new(sub.clone(), true, true);
        coef = svd
            .solve(y, 1e-12 * svd.singular_values.max())
            .map_err(|e| Error::RankDeficient(e.to_string()))?;
        residual = y - &sub * &coef;
        residual_trace.push(residual.norm_squared());
    }

    let mut coefficients = DMatrix::zeros(n, y.ncols());
    for (k, &j) in support.iter().enumerate() {
        coefficients.set_row(j, &coef.row(k));
    }
    Ok(OmpResult { support, coefficients, residual_trace })
}

/// Wraps [`somp`] as a [`SolveResult`] so it can sit in the solver registry.
pub fn somp_solve(a: &DMatrix<f64>, y: &DMatrix<f64>, s: usize) -> Result<SolveResult> {
    let started = Instant::now();
    let out = somp(a, y, s)?;
    let mut r = SolveResult::new(out.coefficients);
    r.iterations = out.support.len();
    r.objective_trace = out.residual_trace;
    r.converged = true;
    r.wall_time = started.elapsed();
    Ok(r)
}
