//! Closed-form first and second derivatives of a plane's smallest scatter
//! eigenvalue with respect to the observing poses.
//!
//! `λ₃` is a root of the characteristic cubic `−λ³ + aλ² + bλ + c = 0`, so by
//! the implicit function theorem its derivatives reduce to derivatives of the
//! coefficients. With `χ = [λ², λ, 1]`, `κ = [−3, 2a, b]` and
//! `φ = (κ·χ)⁻¹ = 1/p'(λ₃)`:
//!
//! ```text
//! ∂λ/∂x_j  = −φ Δ_jᵀ… gradient:  g_j = −φ (λ²·∂a + λ·∂b + ∂c)
//! Hessian:  H_jk = −φ ( w_j g_kᵀ + g_j u_kᵀ + λ² Hᵃ + λ Hᵇ + Hᶜ )
//!           w_j = 2λ·∂a_j + ∂b_j,   u_k = w_k + (2a − 6λ)·g_k
//! ```
//!
//! where `Hᵃ/Hᵇ/Hᶜ` are coefficient second derivatives. The diagonal blocks
//! come out symmetric and the cross blocks satisfy `H_jk = H_kjᵀ`; both facts
//! plus agreement with central finite differences are pinned by the
//! verification suite.
//!
//! Derivatives do not exist where the smallest eigenvalue is repeated
//! (`p'(λ₃) → 0`). Such planes are flagged and their gradient/Hessian
//! contributions are skipped for the iteration; their cost contribution
//! stays.

mod chain;
mod partials;
mod surrogate;

pub use chain::{abc_first, abc_second_cross, abc_second_own, AbcFirst, AbcSecond};
pub use partials::{
    cross_partials_at_identity, m_partials_at_identity, CrossPartials, OwnPartials, ENTRY_ORDER,
};
pub use surrogate::{
    mean_point_decomposition, mean_point_single, surrogate_pair, surrogate_single,
    CrossSurrogate, MeanDecomposition, PlaneObservations, PoseSurrogate,
};

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::error::Result;
use crate::geometry::{characteristic_coeffs, eigenvalues_sym3, CubicCoeffs, DEGENERACY_EPS};
use crate::problem::Problem;

/// Cached per-plane quantities for one evaluation of `λ₃` and its
/// derivatives.
#[derive(Debug, Clone)]
pub struct EigenState {
    pub matrix: Matrix3<f64>,
    pub coeffs: CubicCoeffs,
    /// Smallest eigenvalue (smallest real root of the characteristic cubic).
    pub lambda3: f64,
    /// `χ = [λ₃², λ₃, 1]`
    pub chi: Vector3<f64>,
    /// `κ·χ = p'(λ₃) = −3λ₃² + 2aλ₃ + b`; nonpositive, zero exactly at a
    /// repeated smallest eigenvalue.
    pub slope: f64,
    pub degenerate: bool,
}

impl EigenState {
    pub fn from_matrix(matrix: Matrix3<f64>) -> Self {
        let coeffs = characteristic_coeffs(&matrix);
        let values = eigenvalues_sym3(&matrix);
        let lambda3 = values[0];
        let slope = coeffs.eval_derivative(lambda3);
        let scale = 1.0_f64.max(coeffs.a * coeffs.a);
        EigenState {
            matrix,
            coeffs,
            lambda3,
            chi: Vector3::new(lambda3 * lambda3, lambda3, 1.0),
            slope,
            degenerate: slope.abs() < DEGENERACY_EPS * scale,
        }
    }

    /// `φ = (κ·χ)⁻¹`; only meaningful when not degenerate.
    pub fn phi(&self) -> f64 {
        1.0 / self.slope
    }
}

/// Gradient block `g_j = −φ Δ_j χ` of `λ₃` with respect to pose `j`.
///
/// Pre: the state is not degenerate (callers skip flagged planes).
pub fn lambda_gradient_block(state: &EigenState, first: &AbcFirst) -> Vector6<f64> {
    debug_assert!(!state.degenerate);
    -(first.da * state.chi[0] + first.db * state.chi[1] + first.dc * state.chi[2]) * state.phi()
}

/// Hessian block of `λ₃` for the pose pair `(j, k)`; covers `j = k`.
///
/// Diagonal blocks are symmetric only up to rounding; callers symmetrize them
/// and track the defect.
pub fn lambda_hessian_block(
    state: &EigenState,
    first_j: &AbcFirst,
    first_k: &AbcFirst,
    second: &AbcSecond,
    grad_j: &Vector6<f64>,
    grad_k: &Vector6<f64>,
) -> Matrix6<f64> {
    debug_assert!(!state.degenerate);
    let lambda = state.lambda3;
    let a = state.coeffs.a;
    let w_j = first_j.da * (2.0 * lambda) + first_j.db;
    let w_k = first_k.da * (2.0 * lambda) + first_k.db;
    let u_k = w_k + grad_k * (2.0 * a - 6.0 * lambda);
    let inner = w_j * grad_k.transpose()
        + grad_j * u_k.transpose()
        + second.ha * (lambda * lambda)
        + second.hb * lambda
        + second.hc;
    -inner * state.phi()
}

/// One plane's full contribution to the reduced gradient and Hessian.
#[derive(Debug, Clone)]
pub struct PlaneContribution {
    pub plane_id: usize,
    /// Smallest eigenvalue (unclamped).
    pub lambda3: f64,
    /// Cost contribution, clamped at zero against rounding.
    pub cost: f64,
    pub degenerate: bool,
    /// Observing pose ids; parallel to `gradients` and `own_hessians`.
    pub pose_ids: Vec<usize>,
    pub gradients: Vec<Vector6<f64>>,
    pub own_hessians: Vec<Matrix6<f64>>,
    /// `(local_a, local_b, H)` with `local_a < local_b` indexing `pose_ids`.
    pub cross_hessians: Vec<(usize, usize, Matrix6<f64>)>,
    /// Largest pre-symmetrization defect seen on a diagonal block.
    pub symmetry_defect: f64,
}

/// Computes one plane's gradient and Hessian blocks.
///
/// Pre: the problem is re-centered, i.e. every pose is at identity and the
/// observations carry the current global-frame statistics. Degenerate planes
/// return their cost with empty derivative blocks.
pub fn plane_grad_hess(problem: &Problem, plane_id: usize) -> Result<PlaneContribution> {
    let scatter = problem.build_scatter(plane_id)?;
    let state = EigenState::from_matrix(*scatter.matrix());
    let cost = state.lambda3.max(0.0);

    if state.degenerate {
        return Ok(PlaneContribution {
            plane_id,
            lambda3: state.lambda3,
            cost,
            degenerate: true,
            pose_ids: Vec::new(),
            gradients: Vec::new(),
            own_hessians: Vec::new(),
            cross_hessians: Vec::new(),
            symmetry_defect: 0.0,
        });
    }

    let obs = PlaneObservations::from_problem(problem, plane_id);
    let n_total = obs.total_count();
    let sum_total = *obs.point_sum_total();
    let tracks = obs.tracks();
    let count = tracks.len();

    let mut pose_ids = Vec::with_capacity(count);
    let mut q_vectors = Vec::with_capacity(count);
    let mut partials = Vec::with_capacity(count);
    let mut firsts = Vec::with_capacity(count);
    let mut gradients = Vec::with_capacity(count);
    let mut own_hessians = Vec::with_capacity(count);
    let mut symmetry_defect = 0.0_f64;

    for track in tracks {
        let q = track.point_sum() / n_total;
        let c_j: Vector3<f64> =
            (sum_total - track.point_sum()).fixed_rows::<3>(0).into_owned() / n_total;
        let surrogate = PoseSurrogate {
            q: track.second_moments() - q * q.transpose() * n_total,
            k: -(q * c_j.transpose()) * n_total,
        };
        let own = m_partials_at_identity(&surrogate);
        let first = abc_first(&state.matrix, &own);
        let grad = lambda_gradient_block(&state, &first);
        let second = abc_second_own(&state.matrix, &own);
        let hess = lambda_hessian_block(&state, &first, &first, &second, &grad, &grad);
        let defect = (hess - hess.transpose()).abs().max();
        symmetry_defect = symmetry_defect.max(defect);

        pose_ids.push(track.pose_id);
        q_vectors.push(q);
        partials.push(own);
        firsts.push(first);
        gradients.push(grad);
        own_hessians.push((hess + hess.transpose()) * 0.5);
    }

    let mut cross_hessians = Vec::with_capacity(count * (count - 1) / 2);
    for a in 0..count {
        for b in (a + 1)..count {
            let cross = cross_partials_at_identity(&CrossSurrogate {
                o: -(q_vectors[a] * q_vectors[b].transpose()) * n_total,
            });
            let second = abc_second_cross(&state.matrix, &partials[a], &partials[b], &cross);
            let hess = lambda_hessian_block(
                &state,
                &firsts[a],
                &firsts[b],
                &second,
                &gradients[a],
                &gradients[b],
            );
            cross_hessians.push((a, b, hess));
        }
    }

    Ok(PlaneContribution {
        plane_id,
        lambda3: state.lambda3,
        cost,
        degenerate: false,
        pose_ids,
        gradients,
        own_hessians,
        cross_hessians,
        symmetry_defect,
    })
}
