use nalgebra::{Matrix3, Matrix3x4, Matrix4, Vector3, Vector6};

use crate::error::{Error, Result};

/// Cayley–Gibbs–Rodriguez rotation parameters.
///
/// `s = [0, 0, 0]` maps to the identity rotation, and the parameterization is
/// minimal (3 parameters, no unit-norm constraint). The rotation angle is
/// `2·atan(‖s‖)`, so the representation is well defined for all rotations
/// short of 180°.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgrVector(pub Vector3<f64>);

impl CgrVector {
    pub fn zero() -> Self {
        CgrVector(Vector3::zeros())
    }

    pub fn to_rotation(&self) -> Matrix3<f64> {
        cgr_to_rotation(self)
    }
}

/// Rotation matrix from CGR parameters: `R = ((1 − sᵀs)I + 2[s]ₓ + 2ssᵀ) / (1 + sᵀs)`.
///
/// Total on finite input; the result is orthogonal with determinant +1 by
/// construction.
pub fn cgr_to_rotation(s: &CgrVector) -> Matrix3<f64> {
    let s = s.0;
    let ss = s.dot(&s);
    let bar = Matrix3::identity() * (1.0 - ss) + skew(&s) * 2.0 + s * s.transpose() * 2.0;
    bar / (1.0 + ss)
}

/// Skew-symmetric cross-product matrix `[v]ₓ`.
pub(crate) fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rotation matrix from an axis-angle vector via the Rodrigues formula.
///
/// Used by the pose-perturbation protocol and by test oracles; the solver
/// itself steps through the CGR parameterization only.
pub fn rotation_from_axis_angle(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = w.dot(w);
    let theta = theta2.sqrt();
    let k = skew(w);
    let (s, c) = if theta < 1e-5 {
        // sin θ / θ and (1 − cos θ) / θ² by series; exact enough below 1e-5.
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Matrix3::identity() + k * s + k * k * c
}

/// A rigid transform from a sensor frame to the global frame.
///
/// Stored as an explicit rotation matrix plus translation. The local
/// parameterization used by the solvers is the 6-vector `x = [s; t]` with `s`
/// the CGR rotation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    r: Matrix3<f64>,
    t: Vector3<f64>,
}

const ORTHOGONALITY_TOL: f64 = 1e-9;

impl Pose {
    /// Builds a pose, checking that `r` is a rotation (RᵀR = I, det = +1).
    pub fn new(r: Matrix3<f64>, t: Vector3<f64>) -> Result<Self> {
        let defect = (r.transpose() * r - Matrix3::identity()).norm();
        if !defect.is_finite() || defect > ORTHOGONALITY_TOL {
            return Err(Error::InvalidRotation(format!(
                "RᵀR deviates from identity by {defect:.3e}"
            )));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > ORTHOGONALITY_TOL {
            return Err(Error::InvalidRotation(format!("det(R) = {det}")));
        }
        Ok(Pose { r, t })
    }

    /// Builds a pose without the orthogonality check. The caller guarantees
    /// `r` is a rotation (e.g. it came from `cgr_to_rotation`).
    pub fn from_parts_unchecked(r: Matrix3<f64>, t: Vector3<f64>) -> Self {
        Pose { r, t }
    }

    pub fn identity() -> Self {
        Pose {
            r: Matrix3::identity(),
            t: Vector3::zeros(),
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.r
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.t
    }

    /// The 3×4 compact form `T = [R, t]` acting on homogeneous points.
    pub fn compact(&self) -> Matrix3x4<f64> {
        let mut m = Matrix3x4::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.r);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.t);
        m
    }

    /// The 4×4 homogeneous form `X = [[R, t], [0, 1]]`.
    pub fn homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.r);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.t);
        m
    }

    /// Maps a point from this pose's sensor frame to the global frame.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.r * p + self.t
    }

    /// Maps a global point back into this pose's sensor frame.
    pub fn inverse_transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.r.transpose() * (p - self.t)
    }

    /// Composition `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            r: self.r * other.r,
            t: self.r * other.t + self.t,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.r.transpose();
        Pose {
            r: rt,
            t: -(rt * self.t),
        }
    }
}

/// Derivative of `cgr_to_rotation` at `s = 0` along parameter `m`: `2[e_m]ₓ`.
pub fn cgr_rotation_derivative_at_zero(m: usize) -> Matrix3<f64> {
    skew(&Vector3::ith(m, 2.0))
}

/// Second derivative of `cgr_to_rotation` at `s = 0`:
/// `2(e_m e_nᵀ + e_n e_mᵀ) − 4δ_mn I`.
pub fn cgr_rotation_second_derivative_at_zero(m: usize, n: usize) -> Matrix3<f64> {
    let e_m = Vector3::ith(m, 1.0);
    let e_n = Vector3::ith(n, 1.0);
    let mut out = (e_m * e_n.transpose() + e_n * e_m.transpose()) * 2.0;
    if m == n {
        out -= Matrix3::identity() * 4.0;
    }
    out
}

/// Pose from a 6-vector local step `x = [s; t]` (CGR rotation + translation).
pub fn pose_from_step(x: &Vector6<f64>) -> Pose {
    let s = CgrVector(Vector3::new(x[0], x[1], x[2]));
    Pose {
        r: cgr_to_rotation(&s),
        t: Vector3::new(x[3], x[4], x[5]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cgr_zero_is_identity() {
        let r = cgr_to_rotation(&CgrVector::zero());
        assert_eq!(r, Matrix3::identity());
    }

    #[test]
    fn cgr_unit_x_rotates_ninety_degrees() {
        // ‖s‖ = 1 ⇒ angle 2·atan(1) = 90° about the x-axis.
        let r = cgr_to_rotation(&CgrVector(Vector3::new(1.0, 0.0, 0.0)));
        let v = r * Vector3::new(0.0, 1.0, 0.0);
        assert_relative_eq!(v, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn cgr_matches_axis_angle_oracle() {
        // Compare against the Rodrigues formula with angle 2·atan(‖s‖).
        let cases = [
            Vector3::new(0.3, -0.2, 0.5),
            Vector3::new(-1.2, 0.7, 0.1),
            Vector3::new(0.01, 0.02, -0.03),
        ];
        for s in cases {
            let angle = 2.0 * f64::atan(s.norm());
            let axis = s.normalize();
            let expected = rotation_from_axis_angle(&(axis * angle));
            let got = cgr_to_rotation(&CgrVector(s));
            assert_relative_eq!(got, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn cgr_always_orthogonal() {
        let mut s = Vector3::new(0.9, -2.4, 3.3);
        for _ in 0..20 {
            let r = cgr_to_rotation(&CgrVector(s));
            let defect = (r.transpose() * r - Matrix3::identity()).norm();
            assert!(defect < 1e-12, "defect {defect}");
            assert_relative_eq!(r.determinant(), 1.0, epsilon = 1e-12);
            // cheap LCG walk over parameter space
            s = Vector3::new(
                (s.x * 7.3 + 1.1) % 3.0 - 1.5,
                (s.y * 3.7 - 0.7) % 3.0 - 1.5,
                (s.z * 5.1 + 0.3) % 3.0 - 1.5,
            );
        }
    }

    #[test]
    fn compose_and_inverse_round_trip() {
        let a = pose_from_step(&Vector6::new(0.1, -0.2, 0.3, 1.0, 2.0, 3.0));
        let b = pose_from_step(&Vector6::new(-0.3, 0.1, 0.2, -1.0, 0.5, 0.0));
        let p = Vector3::new(0.4, -1.1, 2.2);
        let via_compose = a.compose(&b).transform_point(&p);
        let via_seq = a.transform_point(&b.transform_point(&p));
        assert_relative_eq!(via_compose, via_seq, epsilon = 1e-12);

        let back = a.inverse().transform_point(&a.transform_point(&p));
        assert_relative_eq!(back, p, epsilon = 1e-12);
    }

    #[test]
    fn pose_new_rejects_non_rotation() {
        let m = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(Pose::new(m, Vector3::zeros()).is_err());
    }
}
