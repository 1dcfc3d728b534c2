//! Name-addressable solver registry.
//!
//! Each algorithm implements [`Solver`]; the harness and CLI look solvers up
//! by the identifiers used in config files (`tls-focuss`, `sd-focuss`, ...).

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::params::{SolveResult, SolverParams};
use crate::{focuss, omp, sd, tls};

/// Inputs for one recovery: dictionary, measurements (`m × L`), and the
/// sparsity level for solvers that need it.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub a: &'a DMatrix<f64>,
    pub y: &'a DMatrix<f64>,
    pub sparsity: Option<usize>,
}

impl<'a> Problem<'a> {
    pub fn new(a: &'a DMatrix<f64>, y: &'a DMatrix<f64>) -> Self {
        Self { a, y, sparsity: None }
    }

    pub fn with_sparsity(mut self, s: usize) -> Self {
        self.sparsity = Some(s);
        self
    }

    pub fn num_vectors(&self) -> usize {
        self.y.ncols()
    }

    fn single(&self) -> DVector<f64> {
        self.y.column(0).into_owned()
    }
}

pub trait Solver: Send + Sync {
    /// Canonical identifier.
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    /// Whether more than one measurement vector is accepted.
    fn supports_mmv(&self) -> bool {
        true
    }

    fn solve(&self, problem: &Problem<'_>, params: &SolverParams) -> Result<SolveResult>;
}

struct StandardFocuss;

impl Solver for StandardFocuss {
    fn name(&self) -> &'static str {
        "focuss"
    }

    fn description(&self) -> &'static str {
        "standard FOCUSS, weighted pseudoinverse update (row-norm weights for L > 1)"
    }

    fn solve(&self, problem: &Problem<'_>, params: &SolverParams) -> Result<SolveResult> {
        if problem.num_vectors() == 1 {
            focuss::standard_focuss(problem.a, &problem.single(), params, None)
        } else {
            focuss::mmv_standard_focuss(problem.a, problem.y, params, None)
        }
    }
}

struct RegularizedFocuss;

impl Solver for RegularizedFocuss {
    fn name(&self) -> &'static str {
        "reg-focuss"
    }

    fn description(&self) -> &'static str {
        "regularized FOCUSS, weighted ridge update (row-norm weights for L > 1)"
    }

    fn solve(&self, problem: &Problem<'_>, params: &SolverParams) -> Result<SolveResult> {
        if problem.num_vectors() == 1 {
            focuss::regularized_focuss(problem.a, &problem.single(), params, None)
        } else {
            focuss::mmv_regularized_focuss(problem.a, problem.y, params, None)
        }
    }
}

struct TlsFocuss;

impl Solver for TlsFocuss {
    fn name(&self) -> &'static str {
        "tls-focuss"
    }

    fn description(&self) -> &'static str {
        "TLS-FOCUSS, reweighted dominant-eigenvector iteration on [-y, A]"
    }

    fn supports_mmv(&self) -> bool {
        false
    }

    fn solve(&self, problem: &Problem<'_>, params: &SolverParams) -> Result<SolveResult> {
        if problem.num_vectors() != 1 {
            return Err(Error::InvalidParam("tls-focuss takes a single measurement vector".into()));
        }
        tls::tls_focuss_solve(problem.a, &problem.single(), params)
    }
}

struct SdFocuss;

impl Solver for SdFocuss {
    fn name(&self) -> &'static str {
        "sd-focuss"
    }

    fn description(&self) -> &'static str {
        "SD-FOCUSS, joint perturbation/signal update (MMV form for L > 1)"
    }

    fn solve(&self, problem: &Problem<'_>, params: &SolverParams) -> Result<SolveResult> {
        if problem.num_vectors() == 1 {
            sd::sd_focuss(problem.a, &problem.single(), params, None, None)
        } else {
            sd::mmv_sd_focuss(problem.a, problem.y, params, None, None)
        }
    }
}

struct Omp;

impl Solver for Omp {
    fn name(&self) -> &'static str {
        "omp"
    }

    fn description(&self) -> &'static str {
        "orthogonal matching pursuit with known sparsity (simultaneous OMP for L > 1)"
    }

    fn solve(&self, problem: &Problem<'_>, _params: &SolverParams) -> Result<SolveResult> {
        let s = problem
            .sparsity
            .ok_or_else(|| Error::InvalidParam("omp needs the sparsity level".into()))?;
        omp::somp_solve(problem.a, problem.y, s)
    }
}

/// Solvers keyed by name, with aliases.
#[derive(Clone, Default)]
pub struct Registry {
    solvers: BTreeMap<String, Arc<dyn Solver>>,
    aliases: BTreeMap<String, String>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// All algorithms shipped with the crate.
    pub fn with_builtins() -> Self {
        let mut r = Self::new();
        r.register(Arc::new(StandardFocuss), &["standard-focuss", "mmv-focuss"]);
        r.register(Arc::new(RegularizedFocuss), &["regularized-focuss", "mmv-reg-focuss"]);
        r.register(Arc::new(TlsFocuss), &[]);
        r.register(Arc::new(SdFocuss), &["mmv-sd-focuss"]);
        r.register(Arc::new(Omp), &["somp", "mmv-omp"]);
        r
    }

    pub fn register(&mut self, solver: Arc<dyn Solver>, aliases: &[&str]) {
        let name = solver.name().to_string();
        for alias in aliases {
            self.aliases.insert((*alias).to_string(), name.clone());
        }
        self.solvers.insert(name, solver);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Solver>> {
        let key = self.aliases.get(name).map(String::as_str).unwrap_or(name);
        self.solvers
            .get(key)
            .cloned()
            .ok_or_else(|| Error::UnknownSolver(name.to_string()))
    }

    /// Canonical names in sorted order.
    pub fn names(&self) -> Vec<&str> {
        self.solvers.keys().map(String::as_str).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Solver>> {
        self.solvers.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_and_aliases_resolve() {
        let r = Registry::with_builtins();
        assert_eq!(r.names(), vec!["focuss", "omp", "reg-focuss", "sd-focuss", "tls-focuss"]);
        assert_eq!(r.get("mmv-sd-focuss").unwrap().name(), "sd-focuss");
        assert_eq!(r.get("somp").unwrap().name(), "omp");
        assert!(matches!(r.get("s-tls"), Err(Error::UnknownSolver(_))));
        assert!(!r.get("tls-focuss").unwrap().supports_mmv());
    }

    #[test]
    fn dispatch_through_trait_objects() {
        let r = Registry::with_builtins();
        let a = DMatrix::<f64>::identity(3, 3);
        let y = DMatrix::from_column_slice(3, 1, &[0.0, 2.0, 0.0]);
        let problem = Problem::new(&a, &y).with_sparsity(1);
        let params = SolverParams::with_sigma(0.5, 0.01);
        for solver in r.iter() {
            let out = solver.solve(&problem, &params).unwrap();
            assert_eq!(out.x_hat.shape(), (3, 1));
            assert!(out.x_hat[(1, 0)] > 1.5, "{}: {}", solver.name(), out.x_hat);
        }
    }

    #[test]
    fn tls_rejects_multiple_vectors() {
        let a = DMatrix::<f64>::identity(2, 2);
        let y = DMatrix::<f64>::identity(2, 2);
        let r = Registry::with_builtins();
        let err = r.get("tls-focuss").unwrap().solve(&Problem::new(&a, &y), &SolverParams::with_sigma(0.5, 0.1));
        assert!(err.is_err());
    }

    #[test]
    fn omp_needs_sparsity() {
        let a = DMatrix::<f64>::identity(2, 2);
        let y = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let r = Registry::with_builtins();
        assert!(r.get("omp").unwrap().solve(&Problem::new(&a, &y), &SolverParams::with_sigma(0.5, 0.1)).is_err());
    }
}
