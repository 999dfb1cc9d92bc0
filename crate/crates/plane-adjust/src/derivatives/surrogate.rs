//! Decompositions of a plane's scatter matrix that isolate its dependence on
//! one pose (or on a pair of poses).
//!
//! With `q_ij = p̃_ij / N_i` and `c_ij` the pose-independent remainder of the
//! centroid, the scatter matrix of plane `i` splits as
//!
//! ```text
//! M_i(x_j)      = T_j Q T_jᵀ + T_j K + Kᵀ T_jᵀ + const,   Q = U_ij − N_i q_ij q_ijᵀ,  K = −N_i q_ij c_ijᵀ
//! M_i(x_j, x_k) = T_j O T_kᵀ + T_k Oᵀ T_jᵀ + const,       O = −N_i q_ij q_ikᵀ
//! ```
//!
//! The constant parts never survive differentiation, so they are not
//! materialized. `Q` is the full 4×4 homogeneous second moment minus the
//! rank-one centroid term (its bottom-right entry participates in the
//! translation derivatives).

use nalgebra::{Matrix4, Matrix4x3, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::problem::TrackStats;

/// One plane's observation set, the unit the derivative machinery works on.
#[derive(Debug, Clone)]
pub struct PlaneObservations<'a> {
    tracks: Vec<&'a TrackStats>,
    total_count: f64,
    point_sum_total: Vector4<f64>,
}

impl<'a> PlaneObservations<'a> {
    pub fn new(tracks: Vec<&'a TrackStats>) -> Result<Self> {
        if tracks.is_empty() {
            return Err(Error::InvalidConfig("plane has no observations".into()));
        }
        let plane_id = tracks[0].plane_id;
        if tracks.iter().any(|t| t.plane_id != plane_id) {
            return Err(Error::InvalidConfig(
                "observation set mixes tracks from different planes".into(),
            ));
        }
        let total: usize = tracks.iter().map(|t| t.count()).sum();
        let point_sum_total = tracks.iter().map(|t| *t.point_sum()).sum();
        Ok(PlaneObservations {
            tracks,
            total_count: total as f64,
            point_sum_total,
        })
    }

    pub fn from_problem(problem: &'a crate::problem::Problem, plane_id: usize) -> Self {
        let tracks: Vec<&TrackStats> = problem
            .plane_tracks(plane_id)
            .iter()
            .map(|&i| &problem.tracks()[i])
            .collect();
        let total: usize = tracks.iter().map(|t| t.count()).sum();
        let point_sum_total = tracks.iter().map(|t| *t.point_sum()).sum();
        PlaneObservations {
            tracks,
            total_count: total as f64,
            point_sum_total,
        }
    }

    pub fn tracks(&self) -> &[&'a TrackStats] {
        &self.tracks
    }

    /// `N_i`, the plane's total point count.
    pub fn total_count(&self) -> f64 {
        self.total_count
    }

    /// `Σₙ p̃_in`, the plane's total homogeneous point sum.
    pub fn point_sum_total(&self) -> &Vector4<f64> {
        &self.point_sum_total
    }

    fn plane_id(&self) -> usize {
        self.tracks[0].plane_id
    }

    fn track_for(&self, pose_id: usize) -> Result<&'a TrackStats> {
        self.tracks
            .iter()
            .find(|t| t.pose_id == pose_id)
            .copied()
            .ok_or(Error::IndexNotObserved {
                plane_id: self.plane_id(),
                pose_id,
            })
    }

    /// Normalized point sum `q_ij = p̃_ij / N_i` of one observation.
    pub fn normalized_point_sum(&self, pose_id: usize) -> Result<Vector4<f64>> {
        Ok(self.track_for(pose_id)?.point_sum() / self.total_count)
    }
}

/// Centroid split `p̄_i = T_j q_j (+ T_k q_k) + remainder` for one or two
/// distinguished poses.
#[derive(Debug, Clone)]
pub struct MeanDecomposition {
    /// `q_ij = p̃_ij / N_i`
    pub q_j: Vector4<f64>,
    /// `q_ik = p̃_ik / N_i`
    pub q_k: Vector4<f64>,
    /// Contribution of every other pose: `(1/N_i) Σ_{n ∉ {j,k}} T_n p̃_in`.
    pub c_jk: Vector3<f64>,
    /// Remainder when only `x_j` is free: `c_j = T_k q_k + c_jk`.
    pub c_j: Vector3<f64>,
}

/// Splits the plane centroid by the two distinguished poses `j ≠ k`.
pub fn mean_point_decomposition(
    obs: &PlaneObservations,
    poses: &[Pose],
    pose_j: usize,
    pose_k: usize,
) -> Result<MeanDecomposition> {
    if pose_j == pose_k {
        return Err(Error::SamePoseIndex { pose_id: pose_j });
    }
    let q_j = obs.normalized_point_sum(pose_j)?;
    let q_k = obs.normalized_point_sum(pose_k)?;
    let mut c_jk = Vector3::zeros();
    for track in obs.tracks() {
        if track.pose_id == pose_j || track.pose_id == pose_k {
            continue;
        }
        c_jk += poses[track.pose_id].compact() * track.point_sum() / obs.total_count();
    }
    let c_j = poses[pose_k].compact() * q_k + c_jk;
    Ok(MeanDecomposition { q_j, q_k, c_jk, c_j })
}

/// Centroid remainder when only `x_j` is free: `p̄_i = T_j q_j + c_j`.
pub fn mean_point_single(
    obs: &PlaneObservations,
    poses: &[Pose],
    pose_j: usize,
) -> Result<(Vector4<f64>, Vector3<f64>)> {
    let q_j = obs.normalized_point_sum(pose_j)?;
    let mut c_j = Vector3::zeros();
    for track in obs.tracks() {
        if track.pose_id == pose_j {
            continue;
        }
        c_j += poses[track.pose_id].compact() * track.point_sum() / obs.total_count();
    }
    Ok((q_j, c_j))
}

/// The `(Q, K)` pair of the single-pose scatter decomposition.
#[derive(Debug, Clone)]
pub struct PoseSurrogate {
    pub q: Matrix4<f64>,
    pub k: Matrix4x3<f64>,
}

/// The rank-one `O` factor of the cross-pose scatter decomposition.
#[derive(Debug, Clone)]
pub struct CrossSurrogate {
    pub o: Matrix4<f64>,
}

/// `Q = U_ij − N_i q_ij q_ijᵀ` and `K = −N_i q_ij c_ijᵀ` for pose `j`.
pub fn surrogate_single(
    obs: &PlaneObservations,
    poses: &[Pose],
    pose_j: usize,
) -> Result<PoseSurrogate> {
    let track = obs.track_for(pose_j)?;
    let (q_j, c_j) = mean_point_single(obs, poses, pose_j)?;
    let n = obs.total_count();
    Ok(PoseSurrogate {
        q: track.second_moments() - q_j * q_j.transpose() * n,
        k: -(q_j * c_j.transpose()) * n,
    })
}

/// `O = −N_i q_ij q_ikᵀ` for the pose pair `j ≠ k`; pose-independent.
pub fn surrogate_pair(
    obs: &PlaneObservations,
    pose_j: usize,
    pose_k: usize,
) -> Result<CrossSurrogate> {
    if pose_j == pose_k {
        return Err(Error::SamePoseIndex { pose_id: pose_j });
    }
    let q_j = obs.normalized_point_sum(pose_j)?;
    let q_k = obs.normalized_point_sum(pose_k)?;
    Ok(CrossSurrogate {
        o: -(q_j * q_k.transpose()) * obs.total_count(),
    })
}
