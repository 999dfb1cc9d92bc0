//! The plane-adjustment problem: poses, per-observation sufficient
//! statistics, the observation graph, dataset I/O, a synthetic scene
//! generator, and the pose-perturbation protocol used by benchmarks.

mod generate;
mod io;
mod perturb;
mod stats;

pub use generate::{generate_scene, GeneratedScene, RawPoints, RawTrack, SceneConfig};
pub use io::{load_poses, load_problem, load_raw_points, save_poses, save_problem, save_raw_points};
pub use perturb::{perturb_poses, NoiseSpec, NOISE_LEVELS};
pub use stats::TrackStats;

use nalgebra::{Matrix3, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::geometry::{pose_from_step, Pose, ScatterMatrix};

/// A validated plane-adjustment problem: `N` poses, `M` planes, and one
/// sufficient-statistics track per (plane, pose) observation.
///
/// Invariants established at construction: every referenced index is in
/// range, every plane is observed by at least two poses, at most one track
/// exists per (plane, pose) pair, and every plane collects at least three
/// points in total.
///
/// Problems are immutable after construction and safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct Problem {
    poses: Vec<Pose>,
    tracks: Vec<TrackStats>,
    plane_count: usize,
    plane_tracks: Vec<Vec<usize>>,
}

impl Problem {
    pub fn new(poses: Vec<Pose>, tracks: Vec<TrackStats>, plane_count: usize) -> Result<Self> {
        let mut plane_tracks = vec![Vec::new(); plane_count];
        let mut seen = std::collections::BTreeSet::new();
        for (idx, track) in tracks.iter().enumerate() {
            if track.plane_id >= plane_count {
                return Err(Error::parse(
                    format!("tracks[{idx}]"),
                    format!("plane_id {} out of range (M = {plane_count})", track.plane_id),
                ));
            }
            if track.pose_id >= poses.len() {
                return Err(Error::parse(
                    format!("tracks[{idx}]"),
                    format!("pose_id {} out of range (N = {})", track.pose_id, poses.len()),
                ));
            }
            if !seen.insert((track.plane_id, track.pose_id)) {
                return Err(Error::parse(
                    format!("tracks[{idx}]"),
                    format!(
                        "duplicate track for plane {} at pose {}",
                        track.plane_id, track.pose_id
                    ),
                ));
            }
            plane_tracks[track.plane_id].push(idx);
        }
        for (plane_id, idxs) in plane_tracks.iter().enumerate() {
            if idxs.len() < 2 {
                return Err(Error::parse(
                    format!("plane {plane_id}"),
                    format!("observed by {} pose(s), need at least 2", idxs.len()),
                ));
            }
            let total: usize = idxs.iter().map(|&i| tracks[i].count()).sum();
            if total < 3 {
                return Err(Error::UnderconstrainedPlane {
                    plane_id,
                    points: total,
                });
            }
        }
        Ok(Problem {
            poses,
            tracks,
            plane_count,
            plane_tracks,
        })
    }

    pub fn pose_count(&self) -> usize {
        self.poses.len()
    }

    pub fn plane_count(&self) -> usize {
        self.plane_count
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn tracks(&self) -> &[TrackStats] {
        &self.tracks
    }

    /// Indices into `tracks()` of the given plane's observations.
    pub fn plane_tracks(&self, plane_id: usize) -> &[usize] {
        &self.plane_tracks[plane_id]
    }

    /// Pose indices observing the given plane.
    pub fn observers(&self, plane_id: usize) -> impl Iterator<Item = usize> + '_ {
        self.plane_tracks[plane_id]
            .iter()
            .map(move |&i| self.tracks[i].pose_id)
    }

    /// Total point count of one plane across all observations.
    pub fn plane_point_count(&self, plane_id: usize) -> usize {
        self.plane_tracks[plane_id]
            .iter()
            .map(|&i| self.tracks[i].count())
            .sum()
    }

    /// Same problem with the pose list replaced.
    pub fn with_poses(&self, poses: Vec<Pose>) -> Result<Self> {
        if poses.len() != self.poses.len() {
            return Err(Error::InvalidConfig(format!(
                "pose count mismatch: {} vs {}",
                poses.len(),
                self.poses.len()
            )));
        }
        Ok(Problem {
            poses,
            tracks: self.tracks.clone(),
            plane_count: self.plane_count,
            plane_tracks: self.plane_tracks.clone(),
        })
    }

    /// Re-expresses every track in the global frame of the current poses and
    /// resets the poses to identity. Costs are unchanged; every pose's local
    /// parameterization is then evaluated at zero.
    pub fn recentered(&self) -> Problem {
        let tracks = self
            .tracks
            .iter()
            .map(|t| t.transformed(&self.poses[t.pose_id]))
            .collect();
        Problem {
            poses: vec![Pose::identity(); self.poses.len()],
            tracks,
            plane_count: self.plane_count,
            plane_tracks: self.plane_tracks.clone(),
        }
    }

    /// Scatter matrix of one plane under the problem's own poses.
    pub fn build_scatter(&self, plane_id: usize) -> Result<ScatterMatrix> {
        self.build_scatter_with_poses(plane_id, &self.poses)
    }

    /// Scatter matrix `M_i = Σⱼ Tⱼ U_ij Tⱼᵀ − N_i p̄ p̄ᵀ` of one plane under an
    /// explicit pose set, assembled purely from sufficient statistics.
    pub fn build_scatter_with_poses(
        &self,
        plane_id: usize,
        poses: &[Pose],
    ) -> Result<ScatterMatrix> {
        let idxs = &self.plane_tracks[plane_id];
        let total: usize = idxs.iter().map(|&i| self.tracks[i].count()).sum();
        if total < 3 {
            return Err(Error::UnderconstrainedPlane {
                plane_id,
                points: total,
            });
        }
        let mut second = Matrix3::zeros();
        let mut sum = Vector3::zeros();
        for &i in idxs {
            let track = &self.tracks[i];
            let t = poses[track.pose_id].compact();
            second += t * track.second_moments() * t.transpose();
            sum += t * track.point_sum();
        }
        let n = total as f64;
        let centroid = sum / n;
        let m = second - centroid * centroid.transpose() * n;
        Ok(ScatterMatrix::new(
            (m + m.transpose()) * 0.5,
            Some(centroid),
            Some(total),
        ))
    }

    /// Reduced cost `τ = Σᵢ λ₃(Mᵢ)` under the problem's own poses.
    pub fn cost(&self) -> Result<f64> {
        self.cost_with_poses(&self.poses)
    }

    /// Reduced cost under an explicit pose set.
    pub fn cost_with_poses(&self, poses: &[Pose]) -> Result<f64> {
        let mut tau = 0.0;
        for plane_id in 0..self.plane_count {
            tau += self.plane_cost_with_poses(plane_id, poses)?;
        }
        Ok(tau)
    }

    /// One plane's optimal point-to-plane cost (smallest scatter eigenvalue,
    /// clamped at zero against rounding).
    pub fn plane_cost_with_poses(&self, plane_id: usize, poses: &[Pose]) -> Result<f64> {
        let scatter = self.build_scatter_with_poses(plane_id, poses)?;
        Ok(scatter.smallest_eigenpair().value.max(0.0))
    }

    /// Cost after left-composing each pose with the local step `offsets[j]`
    /// (`x = [s; t]`, CGR rotation). This is the exact function the solvers
    /// differentiate, and the function finite-difference oracles probe.
    pub fn cost_with_local_offsets(&self, offsets: &[Vector6<f64>]) -> Result<f64> {
        let poses = self.poses_with_local_offsets(offsets)?;
        self.cost_with_poses(&poses)
    }

    /// The pose set obtained by left-composing each pose with a local step.
    pub fn poses_with_local_offsets(&self, offsets: &[Vector6<f64>]) -> Result<Vec<Pose>> {
        if offsets.len() != self.poses.len() {
            return Err(Error::InvalidConfig(format!(
                "offset count {} != pose count {}",
                offsets.len(),
                self.poses.len()
            )));
        }
        Ok(self
            .poses
            .iter()
            .zip(offsets)
            .map(|(pose, x)| pose_from_step(x).compose(pose))
            .collect())
    }
}
