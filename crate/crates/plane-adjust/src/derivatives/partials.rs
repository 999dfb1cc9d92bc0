//! First and second partial derivatives of the scatter-matrix entries with
//! respect to a pose's local parameters `x = [s; t]`, evaluated at `x = 0`.
//!
//! After re-centering, every pose sits at `T₀ = [I, 0]` and the derivatives of
//! `T(x)` are constants. With the CGR map of the rotation block,
//!
//! ```text
//! ∂T/∂s_m |₀ = [2[e_m]ₓ, 0]         ∂T/∂t_i |₀ = [0, e_i]
//! ∂²T/∂s_m∂s_n |₀ = [2(e_m e_nᵀ + e_n e_mᵀ) − 4δ_mn I, 0]
//! ```
//!
//! and all mixed/translation second derivatives vanish. Differentiating the
//! surrogate forms `T Q Tᵀ + T K + Kᵀ Tᵀ` and `T_j O T_kᵀ + T_k Oᵀ T_jᵀ` then
//! gives every entry derivative as a small constant-coefficient expression in
//! the entries of `Q`, `K` and `O`. These are exactly the tabulated
//! closed-form partials; the matrix formulation below reproduces them without
//! hand-transcription (the finite-difference suite pins that down).

use std::sync::LazyLock;

use nalgebra::{Matrix3, Matrix3x4, Matrix6, Vector6};

use super::surrogate::{CrossSurrogate, PoseSurrogate};
use crate::geometry::Pose;

/// `T₀ = [I, 0]`
static T0: LazyLock<Matrix3x4<f64>> = LazyLock::new(|| Pose::identity().compact());

/// `∂T/∂x_m` at `x = 0`, for the six local parameters.
static D1: LazyLock<[Matrix3x4<f64>; 6]> = LazyLock::new(|| {
    let mut out = [Matrix3x4::zeros(); 6];
    for m in 0..3 {
        let rot = crate::geometry::cgr_rotation_derivative_at_zero(m);
        out[m].fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
    }
    for i in 0..3 {
        out[3 + i][(i, 3)] = 1.0;
    }
    out
});

/// `∂²T/∂s_m∂s_n` at `x = 0` (rotation–rotation only; all others vanish).
static D2_ROT: LazyLock<[[Matrix3x4<f64>; 3]; 3]> = LazyLock::new(|| {
    let mut out = [[Matrix3x4::zeros(); 3]; 3];
    for m in 0..3 {
        for n in 0..3 {
            let block = crate::geometry::cgr_rotation_second_derivative_at_zero(m, n);
            out[m][n].fixed_view_mut::<3, 3>(0, 0).copy_from(&block);
        }
    }
    out
});

/// Entry order used when derivatives are viewed per matrix entry:
/// the upper triangle `(1,1), (1,2), (1,3), (2,2), (2,3), (3,3)`.
pub const ENTRY_ORDER: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Own-pose derivatives of the scatter matrix at `x = 0`: one 3×3 matrix per
/// parameter (`first[m] = ∂M/∂x_m`) and per parameter pair
/// (`second[m][n] = ∂²M/∂x_m∂x_n`, symmetric in `(m, n)`).
#[derive(Debug, Clone)]
pub struct OwnPartials {
    pub first: [Matrix3<f64>; 6],
    pub second: [[Matrix3<f64>; 6]; 6],
}

/// Cross-pose second derivatives `second[m][n] = ∂²M/∂x_{jm}∂x_{kn}` at
/// `x_j = x_k = 0`.
#[derive(Debug, Clone)]
pub struct CrossPartials {
    pub second: [[Matrix3<f64>; 6]; 6],
}

/// Differentiates `M(x_j) = T Q Tᵀ + T K + Kᵀ Tᵀ + const` at `x_j = 0`.
pub fn m_partials_at_identity(surrogate: &PoseSurrogate) -> OwnPartials {
    // G = Q T₀ᵀ + K folds the two derivative sources into one 4×3 factor:
    // dM = dT·G + (dT·G)ᵀ.
    let g = surrogate.q * T0.transpose() + surrogate.k;

    let mut first = [Matrix3::zeros(); 6];
    for m in 0..6 {
        let half = D1[m] * g;
        first[m] = half + half.transpose();
    }

    let mut second = [[Matrix3::zeros(); 6]; 6];
    for m in 0..6 {
        for n in m..6 {
            let mut half = D1[m] * surrogate.q * D1[n].transpose();
            if m < 3 && n < 3 {
                half += D2_ROT[m][n] * g;
            }
            let block = half + half.transpose();
            second[m][n] = block;
            second[n][m] = block;
        }
    }
    OwnPartials { first, second }
}

/// Differentiates `M(x_j, x_k) = T_j O T_kᵀ + T_k Oᵀ T_jᵀ + const` at zero.
pub fn cross_partials_at_identity(surrogate: &CrossSurrogate) -> CrossPartials {
    let mut second = [[Matrix3::zeros(); 6]; 6];
    for (m, row) in second.iter_mut().enumerate() {
        for (n, cell) in row.iter_mut().enumerate() {
            let half = D1[m] * surrogate.o * D1[n].transpose();
            *cell = half + half.transpose();
        }
    }
    CrossPartials { second }
}

impl OwnPartials {
    /// `∂m_ef/∂x` as a 6-vector (the tabulated first-order view).
    pub fn entry_first(&self, e: usize, f: usize) -> Vector6<f64> {
        Vector6::from_fn(|m, _| self.first[m][(e, f)])
    }

    /// `∂²m_ef/∂x²` as a 6×6 matrix (the tabulated own-pose view).
    pub fn entry_second(&self, e: usize, f: usize) -> Matrix6<f64> {
        Matrix6::from_fn(|m, n| self.second[m][n][(e, f)])
    }
}

impl CrossPartials {
    /// `∂²m_ef/∂x_j∂x_k` as a 6×6 matrix (the tabulated cross-pose view).
    pub fn entry_second(&self, e: usize, f: usize) -> Matrix6<f64> {
        Matrix6::from_fn(|m, n| self.second[m][n][(e, f)])
    }
}
