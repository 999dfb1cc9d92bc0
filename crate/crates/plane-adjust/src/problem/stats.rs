use nalgebra::{Matrix4, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::geometry::Pose;

/// Sufficient statistics of one plane observation at one pose.
///
/// For the points `{p}` the plane generated at this pose (in the sensor
/// frame), with homogeneous coordinates `p̃ = [p; 1]`:
///
/// * `second_moments = Σ p̃ p̃ᵀ` (symmetric PSD 4×4),
/// * `point_sum = Σ p̃` (its 4th component is the point count),
/// * `count` = number of points.
///
/// Every cost and derivative downstream is computed from these alone, so the
/// raw points never need to be revisited.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackStats {
    pub plane_id: usize,
    pub pose_id: usize,
    count: usize,
    second_moments: Matrix4<f64>,
    point_sum: Vector4<f64>,
}

impl TrackStats {
    /// Accumulates statistics from raw sensor-frame points.
    pub fn accumulate(plane_id: usize, pose_id: usize, points: &[Vector3<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyObservation { plane_id, pose_id });
        }
        if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite())) {
            return Err(Error::InvalidConfig(format!(
                "non-finite point in observation (plane {plane_id}, pose {pose_id})"
            )));
        }
        let mut u = Matrix4::zeros();
        let mut s = Vector4::zeros();
        for p in points {
            let h = Vector4::new(p.x, p.y, p.z, 1.0);
            u += h * h.transpose();
            s += h;
        }
        Ok(TrackStats {
            plane_id,
            pose_id,
            count: points.len(),
            second_moments: u,
            point_sum: s,
        })
    }

    /// Rebuilds statistics from stored components, checking the invariants
    /// (`point_sum[3] == count`, `U[3][3] == count`, `U` symmetric PSD).
    pub fn from_parts(
        plane_id: usize,
        pose_id: usize,
        count: usize,
        second_moments: Matrix4<f64>,
        point_sum: Vector4<f64>,
    ) -> Result<Self> {
        let ctx = format!("track(plane {plane_id}, pose {pose_id})");
        if count == 0 {
            return Err(Error::parse(ctx, "point count N must be >= 1"));
        }
        let n = count as f64;
        if point_sum[3] != n {
            return Err(Error::parse(ctx, format!("p[3] = {} != N = {n}", point_sum[3])));
        }
        if second_moments[(3, 3)] != n {
            return Err(Error::parse(
                ctx,
                format!("U[3][3] = {} != N = {n}", second_moments[(3, 3)]),
            ));
        }
        let scale = second_moments.abs().max().max(1.0);
        let asym = (second_moments - second_moments.transpose()).abs().max();
        if asym > 1e-9 * scale {
            return Err(Error::parse(ctx, format!("U is not symmetric (defect {asym:.3e})")));
        }
        // PSD up to a small shift proportional to the trace
        let shift = 1e-9 * second_moments.trace().abs().max(1.0);
        if (second_moments + Matrix4::identity() * shift).cholesky().is_none() {
            return Err(Error::parse(ctx, "U is not positive semidefinite"));
        }
        Ok(TrackStats {
            plane_id,
            pose_id,
            count,
            second_moments,
            point_sum,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn count_f(&self) -> f64 {
        self.count as f64
    }

    /// `U = Σ p̃ p̃ᵀ`
    pub fn second_moments(&self) -> &Matrix4<f64> {
        &self.second_moments
    }

    /// `p̃ = Σ [p; 1]`
    pub fn point_sum(&self) -> &Vector4<f64> {
        &self.point_sum
    }

    /// Re-expresses the statistics under the rigid transform `pose`:
    /// `U ← X U Xᵀ`, `p̃ ← X p̃`. This is the update that keeps every pose's
    /// local parameterization evaluated at zero across solver iterations.
    pub fn transformed(&self, pose: &Pose) -> TrackStats {
        let x = pose.homogeneous();
        let u = x * self.second_moments * x.transpose();
        TrackStats {
            plane_id: self.plane_id,
            pose_id: self.pose_id,
            count: self.count,
            // congruence preserves symmetry exactly in real arithmetic;
            // re-symmetrize to scrub rounding
            second_moments: (u + u.transpose()) * 0.5,
            point_sum: x * self.point_sum,
        }
    }
}
