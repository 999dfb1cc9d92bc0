//! SE(3) poses with a Cayley–Gibbs–Rodriguez local parameterization, planes,
//! point scatter matrices, and a closed-form symmetric 3×3 eigensolver.
//!
//! Everything here is a pure function of its inputs and safe to call
//! concurrently from any number of threads.

mod eig;
mod plane;
mod pose;
mod scatter;

pub use eig::{
    characteristic_coeffs, cubic_roots_ascending, smallest_eigenpair, CubicCoeffs, EigenPair,
};
pub(crate) use eig::eigenvalues_sym3;
pub use plane::Plane;
pub use pose::{
    cgr_rotation_derivative_at_zero, cgr_rotation_second_derivative_at_zero, cgr_to_rotation,
    pose_from_step, rotation_from_axis_angle, CgrVector, Pose,
};
pub use scatter::{fit_plane, scatter_from_points, PlaneFit, ScatterMatrix};

/// Relative threshold below which the two smallest eigenvalues are treated as
/// a repeated root (the eigenvector, and the eigenvalue derivative, stop being
/// well defined there).
pub const DEGENERACY_EPS: f64 = 1e-9;
