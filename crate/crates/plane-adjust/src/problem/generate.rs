use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Problem, TrackStats};
use crate::error::{Error, Result};
use crate::geometry::{rotation_from_axis_angle, Plane, Pose};

/// Configuration of the synthetic scene generator.
///
/// Scenes are room-like: the first six planes are axis-aligned box faces so
/// the normals always span 3D, further planes get random orientations. Poses
/// are scattered inside the box. Generation is deterministic in `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub plane_count: usize,
    pub pose_count: usize,
    pub points_per_obs: usize,
    /// Probability that a (plane, pose) pair is observed; connectivity repair
    /// may add observations on top.
    pub visibility_prob: f64,
    /// Box edge length, meters.
    pub extent: f64,
    /// Isotropic Gaussian noise std added to each sampled point, meters.
    pub point_noise_sigma: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            plane_count: 8,
            pose_count: 5,
            points_per_obs: 50,
            visibility_prob: 0.7,
            extent: 10.0,
            point_noise_sigma: 0.0,
            seed: 0,
        }
    }
}

/// Raw sensor-frame points retained alongside a generated scene, for oracle
/// checks only — the solvers never read them.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPoints {
    pub tracks: Vec<RawTrack>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawTrack {
    pub plane_id: usize,
    pub pose_id: usize,
    pub points: Vec<Vector3<f64>>,
}

/// A generated scene. The problem's poses are the ground truth.
#[derive(Debug, Clone)]
pub struct GeneratedScene {
    pub problem: Problem,
    pub raw_points: RawPoints,
    pub planes: Vec<Plane>,
}

/// Generates a synthetic plane-adjustment problem.
///
/// Guarantees on success: every plane is observed by ≥ 2 poses, every pose
/// observes ≥ 3 planes whose normals are genuinely non-coplanar, and every
/// plane's scatter matrix has a healthy eigenvalue gap. Draws that violate
/// the gap check are retried a bounded number of times before the
/// configuration is declared infeasible.
pub fn generate_scene(config: &SceneConfig) -> Result<GeneratedScene> {
    validate_config(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut last_err = None;
    for _ in 0..8 {
        match try_generate(config, &mut rng) {
            Ok(scene) => return Ok(scene),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::InfeasibleConfig("generation failed".into())))
}

fn validate_config(config: &SceneConfig) -> Result<()> {
    if config.plane_count < 3 {
        return Err(Error::InfeasibleConfig(format!(
            "need at least 3 planes with normals spanning 3D, got {}",
            config.plane_count
        )));
    }
    if config.pose_count < 2 {
        return Err(Error::InfeasibleConfig(format!(
            "need at least 2 poses, got {}",
            config.pose_count
        )));
    }
    if config.points_per_obs < 2 {
        return Err(Error::InfeasibleConfig(format!(
            "points_per_obs = {} cannot guarantee 3 points per plane over 2 observations",
            config.points_per_obs
        )));
    }
    if !(config.visibility_prob > 0.0 && config.visibility_prob <= 1.0) {
        return Err(Error::InfeasibleConfig(format!(
            "visibility_prob must lie in (0, 1], got {}",
            config.visibility_prob
        )));
    }
    if config.extent <= 0.0 {
        return Err(Error::InfeasibleConfig("extent must be positive".into()));
    }
    if config.point_noise_sigma < 0.0 {
        return Err(Error::InfeasibleConfig("point noise std must be >= 0".into()));
    }
    Ok(())
}

fn try_generate(config: &SceneConfig, rng: &mut ChaCha8Rng) -> Result<GeneratedScene> {
    let (planes, anchors) = make_planes(config, rng);
    let poses = make_poses(config, rng);
    let visibility = make_visibility(config, rng, &planes)?;

    let mut tracks = Vec::new();
    let mut raw_tracks = Vec::new();
    for (plane_id, plane) in planes.iter().enumerate() {
        let (b1, b2) = plane.tangent_basis();
        for (pose_id, pose) in poses.iter().enumerate() {
            if !visibility[plane_id][pose_id] {
                continue;
            }
            let mut points = Vec::with_capacity(config.points_per_obs);
            for _ in 0..config.points_per_obs {
                let u = rng.random_range(-config.extent / 2.0..config.extent / 2.0);
                let v = rng.random_range(-config.extent / 2.0..config.extent / 2.0);
                let mut global = anchors[plane_id] + b1 * u + b2 * v;
                if config.point_noise_sigma > 0.0 {
                    global += Vector3::new(
                        config.point_noise_sigma * rng.sample::<f64, _>(StandardNormal),
                        config.point_noise_sigma * rng.sample::<f64, _>(StandardNormal),
                        config.point_noise_sigma * rng.sample::<f64, _>(StandardNormal),
                    );
                }
                points.push(pose.inverse_transform_point(&global));
            }
            tracks.push(TrackStats::accumulate(plane_id, pose_id, &points)?);
            raw_tracks.push(RawTrack {
                plane_id,
                pose_id,
                points,
            });
        }
    }

    let problem = Problem::new(poses, tracks, config.plane_count)?;

    // reject draws whose scatter spectra are too flat for a stable fit
    for plane_id in 0..config.plane_count {
        let pair = problem.build_scatter(plane_id)?.smallest_eigenpair();
        let scale = 1.0_f64.max(pair.values.iter().sum());
        if pair.values[1] < 1e-6 * scale {
            return Err(Error::InfeasibleConfig(format!(
                "plane {plane_id} drew a rank-deficient point spread"
            )));
        }
    }

    Ok(GeneratedScene {
        problem,
        raw_points: RawPoints { tracks: raw_tracks },
        planes,
    })
}

fn make_planes(config: &SceneConfig, rng: &mut ChaCha8Rng) -> (Vec<Plane>, Vec<Vector3<f64>>) {
    let half = config.extent / 2.0;
    let faces = [
        Vector3::x(),
        Vector3::y(),
        Vector3::z(),
        -Vector3::x(),
        -Vector3::y(),
        -Vector3::z(),
    ];
    let mut planes = Vec::with_capacity(config.plane_count);
    let mut anchors = Vec::with_capacity(config.plane_count);
    for i in 0..config.plane_count {
        let (normal, anchor) = if i < 6 {
            (faces[i], faces[i] * half)
        } else {
            let n = Vector3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            )
            .normalize();
            let anchor = Vector3::new(
                rng.random_range(-0.35 * config.extent..0.35 * config.extent),
                rng.random_range(-0.35 * config.extent..0.35 * config.extent),
                rng.random_range(-0.35 * config.extent..0.35 * config.extent),
            );
            (n, anchor)
        };
        let offset = -normal.dot(&anchor);
        planes.push(Plane::new(normal, offset).expect("unit normal by construction"));
        anchors.push(anchor);
    }
    (planes, anchors)
}

fn make_poses(config: &SceneConfig, rng: &mut ChaCha8Rng) -> Vec<Pose> {
    (0..config.pose_count)
        .map(|_| {
            let t = Vector3::new(
                rng.random_range(-0.3 * config.extent..0.3 * config.extent),
                rng.random_range(-0.3 * config.extent..0.3 * config.extent),
                rng.random_range(-0.3 * config.extent..0.3 * config.extent),
            );
            let axis = Vector3::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            )
            .normalize();
            let angle = rng.random_range(0.0..std::f64::consts::PI * 0.9);
            Pose::from_parts_unchecked(rotation_from_axis_angle(&(axis * angle)), t)
        })
        .collect()
}

/// Bernoulli visibility plus deterministic repair: every plane needs ≥ 2
/// observers, every pose needs ≥ 3 observed planes with non-coplanar normals.
fn make_visibility(
    config: &SceneConfig,
    rng: &mut ChaCha8Rng,
    planes: &[Plane],
) -> Result<Vec<Vec<bool>>> {
    let mut vis = vec![vec![false; config.pose_count]; config.plane_count];
    for row in vis.iter_mut() {
        for cell in row.iter_mut() {
            *cell = rng.random_bool(config.visibility_prob);
        }
    }
    for plane_vis in vis.iter_mut() {
        let mut observers = plane_vis.iter().filter(|&&v| v).count();
        for cell in plane_vis.iter_mut() {
            if observers >= 2 {
                break;
            }
            if !*cell {
                *cell = true;
                observers += 1;
            }
        }
    }
    for pose_id in 0..config.pose_count {
        loop {
            let observed: Vec<usize> = (0..config.plane_count)
                .filter(|&i| vis[i][pose_id])
                .collect();
            if observed.len() >= 3 && normals_span_3d(&observed, planes) {
                break;
            }
            let next = (0..config.plane_count).find(|&i| !vis[i][pose_id]);
            match next {
                Some(i) => vis[i][pose_id] = true,
                None => {
                    return Err(Error::InfeasibleConfig(format!(
                        "pose {pose_id} cannot see 3 planes with independent normals"
                    )))
                }
            }
        }
    }
    Ok(vis)
}

fn normals_span_3d(observed: &[usize], planes: &[Plane]) -> bool {
    for (a, &i) in observed.iter().enumerate() {
        for (b, &j) in observed.iter().enumerate().skip(a + 1) {
            for &k in observed.iter().skip(b + 1) {
                let det = Matrix3::from_columns(&[
                    *planes[i].normal(),
                    *planes[j].normal(),
                    *planes[k].normal(),
                ])
                .determinant();
                if det.abs() > 0.1 {
                    return true;
                }
            }
        }
    }
    false
}
