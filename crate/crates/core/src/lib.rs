//! Sparse recovery for underdetermined linear models whose measurements *and*
//! dictionary are perturbed, `y = (A + E) x + e`.
//!
//! The crate provides
//!
//! * [`tls`]: TLS-FOCUSS, a reweighted minimum-eigenvector iteration on the
//!   augmented system `B = [-y, A]`,
//! * [`sd`]: SD-FOCUSS, which alternates a closed-form estimate of `E` with a
//!   regularized FOCUSS step, for single and multiple measurement vectors,
//! * [`focuss`] and [`omp`]: the FOCUSS-family and greedy baselines,
//! * [`registry`]: every solver behind the [`registry::Solver`] trait,
//!   selectable by name at runtime,
//! * [`harness`]: seeded problem generation, recovery metrics and the
//!   parallel Monte Carlo driver.
//!
//! Everything works over real `f64` data; `ᴴ` in the usual complex
//! formulation is a plain transpose here.

// `!(x > 0.0)` is how parameter checks reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod focuss;
pub mod harness;
pub mod linalg;
pub mod omp;
pub mod params;
pub mod registry;
pub mod sd;
pub mod tls;

pub use error::{Error, Result};
pub use params::{SolveResult, SolverParams};
pub use registry::{Problem, Registry, Solver};
