//! Plane adjustment: joint refinement of depth-sensor poses against plane
//! landmarks by minimizing summed squared point-to-plane distances.
//!
//! Planes have a closed-form optimum given poses (the smallest-eigenvalue
//! eigenvector of each plane's scatter matrix), so they can be eliminated from
//! the cost. The [`newton`] solver minimizes the reduced, pose-only cost with
//! an exact damped Newton method built on closed-form first and second
//! derivatives of the smallest eigenvalue; the [`lm`] solver is the
//! conventional joint Levenberg–Marquardt baseline over poses and planes with
//! Schur elimination of the plane blocks.
//!
//! All costs and derivatives are computed from per-observation sufficient
//! statistics (homogeneous second moments, point sums, counts), so per-
//! iteration work is independent of how many points were captured.

pub mod derivatives;
pub mod error;
pub mod geometry;
pub mod lm;
pub mod newton;
pub mod problem;
pub mod report;

pub use error::{Error, Result};
