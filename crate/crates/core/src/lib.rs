//! Maximum-likelihood quantum state tomography.
//!
//! Given PSD measurement elements `M_n` with empirical weights `w_n`, the
//! estimator minimizes `f(ρ) = Σ w_n · (-log tr(M_n ρ))` over density
//! matrices. The crate provides the matrix-exponentiated update
//! `ρ ← N(exp(log ρ + log R(ρ)))` with `R = -∇f`, whose averaged iterate has
//! gap at most `log(D) / k`, next to the `RρR` baselines and Cover's method.
//! Every iterate comes with the computable gap bound `log λ_max(R(ρ))`.

pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod problems;
pub mod solvers;

pub use error::{Error, Result};
pub use linalg::{DensityMatrix, HermitianMatrix, C64};
pub use model::{Certificate, MeasurementEnsemble, ReductionMap};
pub use problems::ProblemInstance;
pub use solvers::{run, Algorithm, ConvergenceReport, SolverOptions, SolverState, StopReason};
