//! Classical and robust smoothed canonical correlation analysis for paired
//! functional data.
//!
//! Curves are represented by their scores in a finite basis (Fourier or
//! clamped cubic B-splines). The first canonical pair maximizes a penalized
//! association
//!
//! ```text
//! gamma^2(<u,X>, <v,Y>) / ((sigma^2(<u,X>) + tau1 Psi(u)) (sigma^2(<v,Y>) + tau2 Psi(v)))
//! ```
//!
//! where `Psi(u)` is the integrated squared second derivative and the
//! co-association `gamma` / scale `sigma` pair is pluggable: Pearson
//! covariance, Gnanadesikan–Kettenring with a robust scale, Huber M-scatter or
//! OGK. The Pearson case is solved exactly as a generalized eigenproblem;
//! every other case by alternating derivative-free maximization.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod experiments;
pub mod function_space;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod robust;
pub mod scca;
pub mod simulation;

pub use error::{Result, SccaError};
pub use exec::Execution;
pub use function_space::{BasisKind, BasisSystem, Direction, FunctionalSample, Grid};
pub use robust::{AssociationSpec, ScaleSpec};
pub use scca::{
    fit, fit_classical, fit_robust, FitOptions, ObjectiveContext, SccaFit, SmoothingParams,
};
