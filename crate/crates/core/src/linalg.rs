//! Dense real kernels shared by the solvers: dominant eigenpairs of implicit
//! symmetric operators, SPD solves and the minimum-norm starting point.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Operators up to this dimension are materialized and decomposed densely;
/// larger ones go through Lanczos.
pub const DENSE_EIGEN_MAX_DIM: usize = 64;

/// Largest Krylov basis kept before an explicit restart.
const LANCZOS_MAX_BASIS: usize = 120;

/// Condition-number estimate of `A Aᵀ` above which it is treated as singular.
const RANK_COND_LIMIT: f64 = 1e13;

/// A linear, symmetric map `ℝᵈ → ℝᵈ` that is only ever applied, never stored.
pub trait SymOperator {
    fn dim(&self) -> usize;

    /// Writes `self · v` into `out`. Both have length [`dim`](Self::dim).
    fn apply_into(&self, v: &DVector<f64>, out: &mut DVector<f64>);

    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        self.apply_into(v, &mut out);
        out
    }

    /// Dense `d × d` matrix of the operator, built column by column.
    fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        let mut e = DVector::zeros(d);
        let mut col = DVector::zeros(d);
        for j in 0..d {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            m.set_column(j, &col);
            e[j] = 0.0;
        }
        m
    }
}

impl SymOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_into(&self, v: &DVector<f64>, out: &mut DVector<f64>) {
        self.mul_to(v, out);
    }
}

/// Wraps a closure as a [`SymOperator`].
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F> FnOperator<F>
where
    F: Fn(&DVector<f64>, &mut DVector<f64>),
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> SymOperator for FnOperator<F>
where
    F: Fn(&DVector<f64>, &mut DVector<f64>),
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, v: &DVector<f64>, out: &mut DVector<f64>) {
        (self.f)(v, out)
    }
}

/// Eigenvalue with a unit-norm eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: DVector<f64>,
}

impl EigenPair {
    /// `‖op·v − λv‖₂`.
    pub fn residual<O: SymOperator + ?Sized>(&self, op: &O) -> f64 {
        let mut r = op.apply(&self.vector);
        r.axpy(-self.value, &self.vector, 1.0);
        r.norm()
    }
}

/// Flips `v` so that its entry of largest magnitude (lowest index on ties) is
/// positive.
pub fn canonicalize_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

fn scaled_tol(tol: f64, value: f64) -> f64 {
    tol * value.abs().max(1.0)
}

/// Largest (algebraic) eigenvalue of `op` and its eigenvector.
///
/// The residual `‖op·v − λv‖` is held to `tol·max(1, |λ|)`. Small operators are
/// decomposed densely; larger ones use Lanczos with full reorthogonalization.
pub fn dominant_eigenpair<O: SymOperator + ?Sized>(
    op: &O,
    tol: f64,
    max_iter: usize,
) -> Result<EigenPair> {
    dominant_eigenpair_from(op, None, tol, max_iter)
}

/// As [`dominant_eigenpair`], seeding the Krylov space with `start` when the
/// Lanczos path is taken.
pub fn dominant_eigenpair_from<O: SymOperator + ?Sized>(
    op: &O,
    start: Option<&DVector<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<EigenPair> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParam(format!("eigen tolerance must be positive, got {tol}")));
    }
    if op.dim() == 0 {
        return Err(Error::DimensionMismatch("operator has dimension 0".into()));
    }
    if let Some(s) = start {
        if s.len() != op.dim() {
            return Err(Error::DimensionMismatch(format!(
                "start vector has length {}, operator dimension is {}",
                s.len(),
                op.dim()
            )));
        }
    }
    if op.dim() <= DENSE_EIGEN_MAX_DIM {
        dense_dominant(op, tol)
    } else {
        lanczos_dominant(op, start, tol, max_iter)
    }
}

/// Dense route: materialize, symmetrize, full eigendecomposition.
pub fn dense_dominant<O: SymOperator + ?Sized>(op: &O, tol: f64) -> Result<EigenPair> {
    let m = op.to_dense();
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let idx = eig.eigenvalues.imax();
    let mut vector = eig.eigenvectors.column(idx).into_owned();
    vector.normalize_mut();
    canonicalize_sign(&mut vector);
    let pair = EigenPair { value: eig.eigenvalues[idx], vector };
    let residual = pair.residual(op);
    if residual > scaled_tol(tol, pair.value) {
        return Err(Error::NonConvergence { residual, iterations: 1 });
    }
    Ok(pair)
}

fn default_start(d: usize) -> DVector<f64> {
    // Deterministic, nonzero in every coordinate and not aligned with any axis.
    DVector::from_fn(d, |i, _| 1.0 + 0.5 * ((i * 7919) % 13) as f64 / 13.0)
}

/// Lanczos iteration with full reorthogonalization and explicit restarts.
///
/// `max_iter` bounds the total number of operator applications.
pub fn lanczos_dominant<O: SymOperator + ?Sized>(
    op: &O,
    start: Option<&DVector<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<EigenPair> {
    let d = op.dim();
    let cap = d.min(LANCZOS_MAX_BASIS);
    let mut v0 = match start {
        Some(s) if s.norm() > 0.0 => s.clone(),
        _ => default_start(d),
    };
    let mut applied = 0usize;
    let mut last_residual = f64::INFINITY;
    let mut w = DVector::zeros(d);

    while applied < max_iter.max(1) {
        let mut basis: Vec<DVector<f64>> = Vec::with_capacity(cap + 1);
        let mut alphas: Vec<f64> = Vec::with_capacity(cap);
        let mut betas: Vec<f64> = Vec::with_capacity(cap);
        basis.push(v0.normalize());

        for j in 0..cap {
            op.apply_into(&basis[j], &mut w);
            applied += 1;
            let a = basis[j].dot(&w);
            alphas.push(a);
            w.axpy(-a, &basis[j], 1.0);
            if j > 0 {
                w.axpy(-betas[j - 1], &basis[j - 1], 1.0);
            }
            // Two passes of classical Gram-Schmidt against the whole basis.
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dot(&w);
                    w.axpy(-c, q, 1.0);
                }
            }
            let b = w.norm();

            let (theta, s) = tridiagonal_top(&alphas, &betas);
            let estimate = (b * s[j]).abs();
            let exhausted = b <= 1e-14 * a.abs().max(1.0) || j + 1 == d;

            if estimate <= scaled_tol(tol, theta) || exhausted || applied >= max_iter {
                let mut y = DVector::zeros(d);
                for (q, &c) in basis.iter().zip(s.iter()) {
                    y.axpy(c, q, 1.0);
                }
                y.normalize_mut();
                canonicalize_sign(&mut y);
                let pair = EigenPair { value: theta, vector: y };
                last_residual = pair.residual(op);
                if last_residual <= scaled_tol(tol, theta) {
                    return Ok(pair);
                }
                v0 = pair.vector;
                break;
            }
            betas.push(b);
            basis.push(&w / b);

            if j + 1 == cap {
                // Basis full without convergence: restart from the current Ritz vector.
                let (_, s) = tridiagonal_top(&alphas, &betas[..j]);
                let mut y = DVector::zeros(d);
                for (q, &c) in basis.iter().zip(s.iter()) {
                    y.axpy(c, q, 1.0);
                }
                v0 = y;
            }
        }
    }
    Err(Error::NonConvergence { residual: last_residual, iterations: applied })
}

/// Largest eigenpair of the symmetric tridiagonal matrix with diagonal
/// `alphas` and off-diagonal `betas` (`betas.len() + 1 == alphas.len()`).
fn tridiagonal_top(alphas: &[f64], betas: &[f64]) -> (f64, DVector<f64>) {
    let k = alphas.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let idx = eig.eigenvalues.imax();
    (eig.eigenvalues[idx], eig.eigenvectors.column(idx).into_owned())
}

/// Cholesky factor of a symmetric positive-definite matrix, reusable across
/// right-hand sides.
#[derive(Clone, Debug)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
}

impl SpdFactor {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "SPD matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Cholesky::new(m).map(|chol| Self { chol }).ok_or(Error::NotPositiveDefinite)
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn solve(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rows(rhs.nrows())?;
        Ok(self.chol.solve(rhs))
    }

    pub fn solve_vec(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_rows(rhs.len())?;
        Ok(self.chol.solve(rhs))
    }

    /// In-place solve; the caller guarantees matching length.
    pub(crate) fn solve_vec_mut(&self, rhs: &mut DVector<f64>) {
        self.chol.solve_mut(rhs);
    }

    /// Rough 2-norm condition estimate from the Cholesky diagonal.
    pub fn condition_estimate(&self) -> f64 {
        let diag = self.chol.l_dirty().diagonal();
        let max = diag.max();
        let min = diag.min();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            (max / min).powi(2)
        }
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {rows} rows, matrix is {0}x{0}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Solves `M · X = rhs` for symmetric positive-definite `M`.
pub fn spd_solve(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    SpdFactor::new(m.clone())?.solve(rhs)
}

/// Vector form of [`spd_solve`].
pub fn spd_solve_vec(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    SpdFactor::new(m.clone())?.solve_vec(rhs)
}

/// Minimum-ℓ2-norm solutions `X₀ = Aᵀ(AAᵀ)⁻¹Y`, one per column of `Y`.
pub fn min_norm_solution_mmv(a: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "dictionary has {} rows, measurements have {}",
            a.nrows(),
            y.nrows()
        )));
    }
    let gram = a * a.transpose();
    let factor = SpdFactor::new(gram)
        .map_err(|_| Error::RankDeficient("A Aᵀ is not positive definite".into()))?;
    let cond = factor.condition_estimate();
    if cond > RANK_COND_LIMIT {
        return Err(Error::RankDeficient(format!("cond(A Aᵀ) ≈ {cond:.3e}")));
    }
    Ok(a.transpose() * factor.solve(y)?)
}

/// Minimum-ℓ2-norm solution `x₀ = Aᵀ(AAᵀ)⁻¹y`.
pub fn min_norm_solution(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let y = DMatrix::from_column_slice(y.len(), 1, y.as_slice());
    let x = min_norm_solution_mmv(a, &y)?;
    Ok(x.column(0).into_owned())
}
