//! Accelerated proximal gradient (FISTA) with restart schemes for composite
//! convex problems `min_{x∈X} h(x) + Ψ(x)` under a diagonal metric.
//!
//! Besides the solvers, the crate ships the randomized weighted-Lasso
//! benchmark family, the Gershgorin metric, and reference oracles for `f*` and
//! the quadratic growth parameter.

pub mod error;
pub mod fista;
pub mod io;
pub mod lasso;
pub mod metric;
pub mod model;
pub mod oracle;
pub mod prox;
pub mod restart;
pub mod sparse;

pub use error::{Error, Result};
pub use fista::{fista, ExitCondition, FistaExit, FistaOptions, FistaResult, TSequence};
pub use lasso::{gershgorin_metric, LassoProblem, LassoSpec};
pub use metric::{dual_norm, Metric};
pub use model::{
    BoxSet, CompositeProblem, Constraint, LeastSquares, ProxStep, Quadratic, Regularizer,
    SmoothFunction,
};
pub use restart::{
    lcr_fista, no_restart, restart_fista, solve, RestartOutcome, RestartRecord, RestartRun,
    RestartTrace, RunStatus, Scheme,
};
pub use sparse::CscMatrix;
