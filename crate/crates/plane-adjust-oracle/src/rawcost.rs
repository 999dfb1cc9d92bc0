use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};

use plane_adjust::error::{Error, Result};
use plane_adjust::geometry::{Plane, Pose};
use plane_adjust::problem::RawPoints;

use crate::jacobi::jacobi_eigensolve;

/// Direct point-to-plane cost over retained raw points.
///
/// With `planes` supplied, evaluates `Σ (n·(R p + t) + d)²` by plain loops.
/// Without planes, pools each plane's points in the global frame, fits the
/// optimal plane through the Jacobi eigensolver (not the production cubic
/// path), and sums the directly evaluated residuals — an end-to-end
/// independent evaluation of the reduced cost.
pub fn raw_point_cost(
    raw: &RawPoints,
    poses: &[Pose],
    planes: Option<&[Plane]>,
) -> Result<f64> {
    if raw.tracks.is_empty() {
        return Err(Error::MissingRawPoints {
            plane_id: 0,
            pose_id: 0,
        });
    }
    match planes {
        Some(planes) => {
            let mut cost = 0.0;
            for track in &raw.tracks {
                let plane = &planes[track.plane_id];
                let pose = &poses[track.pose_id];
                for p in &track.points {
                    cost += plane.signed_distance(&pose.transform_point(p)).powi(2);
                }
            }
            Ok(cost)
        }
        None => {
            let mut pooled: BTreeMap<usize, Vec<Vector3<f64>>> = BTreeMap::new();
            for track in &raw.tracks {
                let pose = &poses[track.pose_id];
                pooled
                    .entry(track.plane_id)
                    .or_default()
                    .extend(track.points.iter().map(|p| pose.transform_point(p)));
            }
            let mut cost = 0.0;
            for points in pooled.values() {
                cost += optimal_plane_cost(points);
            }
            Ok(cost)
        }
    }
}

/// Optimal sum of squared distances for one pooled point set, via centroid +
/// Jacobi smallest eigenvector + direct evaluation.
fn optimal_plane_cost(points: &[Vector3<f64>]) -> f64 {
    let k = points.len() as f64;
    let centroid = points.iter().sum::<Vector3<f64>>() / k;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        scatter += d * d.transpose();
    }
    let eig = jacobi_eigensolve(&scatter);
    let normal = eig.vectors[0];
    let offset = -normal.dot(&centroid);
    points.iter().map(|p| (normal.dot(p) + offset).powi(2)).sum()
}
