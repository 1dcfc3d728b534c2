use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};
use crate::focuss::row_norms;

/// Indices of the `s` rows of largest ℓ2 norm (largest magnitude when `L = 1`),
/// ties broken by lower index, returned sorted.
pub fn top_support(x_hat: &DMatrix<f64>, s: usize) -> Vec<usize> {
    let norms = row_norms(x_hat);
    let mut idx: Vec<usize> = (0..norms.len()).collect();
    idx.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    idx.truncate(s);
    idx.sort_unstable();
    idx
}

/// True iff the `s` largest rows of `x_hat` are exactly the true support.
pub fn support_success(x_hat: &DMatrix<f64>, support: &[usize], s: usize) -> bool {
    if x_hat.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let mut truth = support.to_vec();
    truth.sort_unstable();
    top_support(x_hat, s) == truth
}

/// Root-mean-square amplitude error over the support entries (all `L` columns).
pub fn amplitude_rmse(x_hat: &DMatrix<f64>, x_true: &DMatrix<f64>, support: &[usize]) -> f64 {
    let l = x_true.ncols();
    let count = support.len() * l;
    if count == 0 {
        return 0.0;
    }
    let sq: f64 = support
        .iter()
        .flat_map(|&i| (0..l).map(move |c| (i, c)))
        .map(|(i, c)| (x_hat[(i, c)] - x_true[(i, c)]).powi(2))
        .sum();
    (sq / count as f64).sqrt()
}

/// Least-squares amplitudes on `support` against `a`, zero elsewhere.
pub fn refit_on_support(a: &DMatrix<f64>, y: &DMatrix<f64>, support: &[usize]) -> Result<DMatrix<f64>> {
    let sub = a.select_columns(support.iter());
    let svd = SVD::new(sub, true, true);
    let tol = 1e-12 * svd.singular_values.max();
    let coef = svd.solve(y, tol).map_err(|e| Error::RankDeficient(e.to_string()))?;
    let mut out = DMatrix::zeros(a.ncols(), y.ncols());
    for (k, &i) in support.iter().enumerate() {
        out.set_row(i, &coef.row(k));
    }
    Ok(out)
}

/// `‖X̂ − X‖_F² / ‖X‖_F²` for one trial.
pub fn relative_mse(x_hat: &DMatrix<f64>, x_true: &DMatrix<f64>) -> Result<f64> {
    if x_hat.shape() != x_true.shape() {
        return Err(Error::DimensionMismatch(format!(
            "estimate is {:?}, truth is {:?}",
            x_hat.shape(),
            x_true.shape()
        )));
    }
    let den = x_true.norm_squared();
    if den == 0.0 {
        return Err(Error::InvalidParam("relative MSE against an all-zero truth".into()));
    }
    Ok((x_hat - x_true).norm_squared() / den)
}
