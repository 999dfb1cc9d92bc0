//! Independent oracles used to validate the solver crate: central
//! finite-difference gradients and Hessians, a classical Jacobi eigensolver,
//! and direct raw-point cost evaluation.
//!
//! Nothing here calls the analytic-derivative or solver machinery — the only
//! shared code is the data model (poses, planes, problems). Cost-function
//! handles are supplied by the caller, so finite differences probe exactly
//! the function the caller says they should.

mod fd;
mod jacobi;
mod rawcost;

pub use fd::{fd_gradient, fd_hessian, FdSpec};
pub use jacobi::{jacobi_eigensolve, JacobiEigen};
pub use rawcost::raw_point_cost;
