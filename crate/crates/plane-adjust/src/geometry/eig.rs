//! Closed-form eigensolving for symmetric 3×3 matrices.
//!
//! The characteristic polynomial is written as `−λ³ + aλ² + bλ + c = 0`; its
//! three real roots come from the trigonometric solution of the depressed
//! cubic (a symmetric matrix guarantees a real spectrum, so the `acos`
//! argument only leaves `[−1, 1]` through rounding and is clamped). Each root
//! gets a guarded Newton polish. The eigenvector of the smallest eigenvalue is
//! extracted from cross products of rows of `M − λ₃I`, falling back to a
//! Jacobi sweep when the spectrum is too degenerate for that to be stable.

use nalgebra::{Matrix3, Vector3};

use super::DEGENERACY_EPS;

/// Coefficients of the characteristic cubic `−λ³ + aλ² + bλ + c = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CubicCoeffs {
    /// Value of the characteristic polynomial at `lambda`.
    pub fn eval(&self, lambda: f64) -> f64 {
        -lambda.powi(3) + self.a * lambda * lambda + self.b * lambda + self.c
    }

    /// Derivative `−3λ² + 2aλ + b` of the characteristic polynomial.
    pub fn eval_derivative(&self, lambda: f64) -> f64 {
        -3.0 * lambda * lambda + 2.0 * self.a * lambda + self.b
    }
}

/// Characteristic-cubic coefficients of a symmetric 3×3 matrix.
///
/// `a` is the trace, `c` the determinant, and `b` the negated sum of principal
/// 2×2 minors, matching the `−λ³ + aλ² + bλ + c` sign convention.
pub fn characteristic_coeffs(m: &Matrix3<f64>) -> CubicCoeffs {
    let (m11, m12, m13) = (m[(0, 0)], m[(0, 1)], m[(0, 2)]);
    let (m22, m23, m33) = (m[(1, 1)], m[(1, 2)], m[(2, 2)]);
    CubicCoeffs {
        a: m11 + m22 + m33,
        b: m12 * m12 + m13 * m13 + m23 * m23 - m11 * m22 - m11 * m33 - m22 * m33,
        c: -m33 * m12 * m12 + 2.0 * m12 * m13 * m23 - m22 * m13 * m13 - m11 * m23 * m23
            + m11 * m22 * m33,
    }
}

/// The three real roots of the characteristic cubic, ascending.
pub fn cubic_roots_ascending(coeffs: &CubicCoeffs) -> [f64; 3] {
    let CubicCoeffs { a, b, c } = *coeffs;
    // Depress λ³ − aλ² − bλ − c via λ = y + a/3: y³ + py + q = 0.
    let p = -(a * a / 3.0 + b);
    let q = -(2.0 * a * a * a / 27.0 + a * b / 3.0 + c);

    let shift = a / 3.0;
    let mut roots = if p >= -1e-300 {
        // p ≈ 0 together with a real spectrum forces q ≈ 0: triple root.
        [shift; 3]
    } else {
        let half = -p / 3.0;
        let m = 2.0 * half.sqrt();
        // cos 3ψ = −(q/2)·(−p/3)^(−3/2), clamped against rounding
        let h = (-(q / 2.0) / (half * half.sqrt())).clamp(-1.0, 1.0);
        let psi = h.acos() / 3.0;
        let third = 2.0 * std::f64::consts::PI / 3.0;
        [
            m * psi.cos() + shift,
            m * (psi - third).cos() + shift,
            m * (psi - 2.0 * third).cos() + shift,
        ]
    };

    // One guarded Newton polish per root sharpens the closed form to full
    // double precision; skipped near repeated roots where p' vanishes.
    let scale = 1.0_f64.max(a.abs());
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let d = coeffs.eval_derivative(*r);
            if d.abs() < 1e-12 * scale * scale {
                break;
            }
            let step = coeffs.eval(*r) / d;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

/// Smallest eigenvalue and eigenvector of a symmetric 3×3 matrix.
#[derive(Debug, Clone)]
pub struct EigenPair {
    /// Smallest eigenvalue λ₃.
    pub value: f64,
    /// Unit eigenvector for λ₃; sign fixed so its first nonzero component is
    /// positive.
    pub vector: Vector3<f64>,
    /// All three eigenvalues, ascending (`values[0] == value`).
    pub values: [f64; 3],
    /// Set when `λ₂ − λ₃` falls below the degeneracy threshold; the
    /// eigenvector is then one valid choice among many.
    pub degenerate: bool,
}

/// Near a repeated root the cubic's accuracy degrades to O(√ε)·scale; gaps
/// read below this zone are recomputed by Jacobi sweeps, which stay exact for
/// repeated eigenvalues.
const CLOSE_ROOT_ZONE: f64 = 1e-6;

/// Ascending eigenvalues of a symmetric 3×3 matrix: the cubic's roots,
/// refined by Jacobi sweeps when the two smallest are too close for the
/// closed form to resolve. Single source of truth for every eigenvalue
/// evaluation in the crate.
pub(crate) fn eigenvalues_sym3(m: &Matrix3<f64>) -> [f64; 3] {
    let coeffs = characteristic_coeffs(m);
    let roots = cubic_roots_ascending(&coeffs);
    let scale = 1.0_f64.max(coeffs.a.abs());
    let mut values = if roots[1] - roots[0] < CLOSE_ROOT_ZONE * scale {
        jacobi_decomposition(m).0
    } else {
        roots
    };
    // Newton polish on the shifted determinant. Expanding the coefficient
    // cubic loses ~ε·tr³ absolute accuracy to cancellation in det(M); the
    // determinant of the shifted matrix only loses ~ε·tr², which matters for
    // small eigenvalues of large-trace scatters.
    for value in values.iter_mut() {
        for _ in 0..2 {
            let shifted = m - Matrix3::identity() * *value;
            let slope = -(principal_minor_sum(&shifted));
            if slope.abs() < 1e-12 * scale * scale {
                break;
            }
            let step = shifted.determinant() / slope;
            if !step.is_finite() {
                break;
            }
            *value -= step;
        }
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values
}

/// Sum of the principal 2×2 minors; `d/dλ det(M − λI) = −Σ minors(M − λI)`.
fn principal_minor_sum(m: &Matrix3<f64>) -> f64 {
    m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)]
        + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)]
        + m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// Computes the smallest eigenpair via the characteristic cubic.
pub fn smallest_eigenpair(m: &Matrix3<f64>) -> EigenPair {
    let ascending = eigenvalues_sym3(m);
    let lambda3 = ascending[0];
    let trace_scale = 1.0_f64.max(m.trace().abs());
    let degenerate = ascending[1] - ascending[0] < DEGENERACY_EPS * trace_scale;

    let vector = eigenvector_for(m, lambda3).unwrap_or_else(|| {
        let (values, vectors) = jacobi_decomposition(m);
        let _ = values;
        vectors[0]
    });
    EigenPair {
        value: lambda3,
        vector: fix_sign(vector),
        values: ascending,
        degenerate,
    }
}

/// Eigenvector from cross products of rows of `M − λI`; the row pair with the
/// largest cross-product norm wins. Returns `None` when every cross product is
/// negligible (repeated eigenvalue).
fn eigenvector_for(m: &Matrix3<f64>, lambda: f64) -> Option<Vector3<f64>> {
    let shifted = m - Matrix3::identity() * lambda;
    let r0: Vector3<f64> = shifted.row(0).transpose();
    let r1: Vector3<f64> = shifted.row(1).transpose();
    let r2: Vector3<f64> = shifted.row(2).transpose();
    let candidates = [r0.cross(&r1), r0.cross(&r2), r1.cross(&r2)];
    let best = candidates
        .iter()
        .max_by(|a, b| a.norm_squared().partial_cmp(&b.norm_squared()).unwrap())?;
    let scale = 1.0_f64.max(shifted.norm());
    if best.norm() < 1e-12 * scale * scale {
        return None;
    }
    Some(best.normalize())
}

/// Cyclic Jacobi sweeps; exact for repeated spectra where the closed-form
/// cubic and the cross-product extraction both lose accuracy. Returns
/// ascending eigenvalues with matching eigenvectors.
fn jacobi_decomposition(m: &Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let mut a = *m;
    let mut v = Matrix3::<f64>::identity();
    for _ in 0..32 {
        let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
        if off < 1e-28 * 1.0_f64.max(a.norm_squared()) {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            if a[(p, q)].abs() < 1e-300 {
                continue;
            }
            let theta = 0.5 * (2.0 * a[(p, q)]).atan2(a[(q, q)] - a[(p, p)]);
            let (s, c) = theta.sin_cos();
            let mut rot = Matrix3::<f64>::identity();
            rot[(p, p)] = c;
            rot[(q, q)] = c;
            rot[(p, q)] = s;
            rot[(q, p)] = -s;
            a = rot.transpose() * a * rot;
            v *= rot;
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    (
        [a[(order[0], order[0])], a[(order[1], order[1])], a[(order[2], order[2])]],
        [
            v.column(order[0]).into_owned().normalize(),
            v.column(order[1]).into_owned().normalize(),
            v.column(order[2]).into_owned().normalize(),
        ],
    )
}

/// Flips the vector so its first component larger than 1e-9 in magnitude is
/// positive; unit vectors always have one.
fn fix_sign(v: Vector3<f64>) -> Vector3<f64> {
    for i in 0..3 {
        if v[i].abs() > 1e-9 {
            return if v[i] < 0.0 { -v } else { v };
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_case() {
        let m = Matrix3::from_diagonal(&Vector3::new(3.0, 2.0, 1.0));
        let pair = smallest_eigenpair(&m);
        assert_relative_eq!(pair.value, 1.0, epsilon = 1e-12);
        assert_relative_eq!(pair.vector, Vector3::z(), epsilon = 1e-12);
        assert!(!pair.degenerate);
    }

    #[test]
    fn characteristic_coeffs_of_diag_321() {
        // −λ³ + 6λ² − 11λ + 6 = −(λ−1)(λ−2)(λ−3)
        let m = Matrix3::from_diagonal(&Vector3::new(3.0, 2.0, 1.0));
        let coeffs = characteristic_coeffs(&m);
        assert_eq!((coeffs.a, coeffs.b, coeffs.c), (6.0, -11.0, 6.0));
        let roots = cubic_roots_ascending(&coeffs);
        assert_relative_eq!(roots[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(roots[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(roots[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_matrix_has_zero_coeffs_and_roots() {
        let coeffs = characteristic_coeffs(&Matrix3::zeros());
        assert_eq!((coeffs.a, coeffs.b, coeffs.c), (0.0, 0.0, 0.0));
        let pair = smallest_eigenpair(&Matrix3::zeros());
        assert_eq!(pair.value, 0.0);
    }

    #[test]
    fn identity_is_flagged_degenerate() {
        let pair = smallest_eigenpair(&Matrix3::identity());
        assert_relative_eq!(pair.value, 1.0, epsilon = 1e-12);
        assert!(pair.degenerate);
        assert_relative_eq!(pair.vector.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_residual_is_small_on_dense_matrix() {
        let m = Matrix3::new(4.0, 1.0, -0.5, 1.0, 3.0, 0.25, -0.5, 0.25, 2.0);
        let pair = smallest_eigenpair(&m);
        let residual = (m * pair.vector - pair.vector * pair.value).norm();
        assert!(residual < 1e-12, "residual {residual}");
        // cubic vanishes at every root
        let coeffs = characteristic_coeffs(&m);
        for v in pair.values {
            assert!(coeffs.eval(v).abs() < 1e-12 * coeffs.a.abs().max(1.0).powi(3));
        }
    }

    #[test]
    fn sign_convention_first_nonzero_positive() {
        let m = Matrix3::from_diagonal(&Vector3::new(1.0, 3.0, 2.0));
        let pair = smallest_eigenpair(&m);
        assert!(pair.vector.x > 0.0);
    }
}
