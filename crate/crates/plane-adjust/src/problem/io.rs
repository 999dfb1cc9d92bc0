//! Dataset file I/O.
//!
//! Datasets are versioned JSON with row-major matrix arrays:
//!
//! ```text
//! { "schema_version": 1,
//!   "poses":  [ { "R": [9 numbers, row-major], "t": [3] }, ... ],
//!   "tracks": [ { "plane_id", "pose_id", "N", "U": [16, row-major], "p": [4] }, ... ] }
//! ```
//!
//! Numbers are serialized as shortest round-tripping decimals, so
//! `load(save(p))` reproduces `p` bit-exactly and `save(load(f))` reproduces
//! the file bytes for files this module wrote.

use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::{Problem, RawPoints, RawTrack, TrackStats};
use crate::error::{Error, Result};
use crate::geometry::Pose;

const SCHEMA_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct PoseDto {
    #[serde(rename = "R")]
    r: Vec<f64>,
    t: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TrackDto {
    plane_id: usize,
    pose_id: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "U")]
    u: Vec<f64>,
    p: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DatasetDto {
    schema_version: u64,
    poses: Vec<PoseDto>,
    tracks: Vec<TrackDto>,
}

#[derive(Serialize, Deserialize)]
struct RawTrackDto {
    plane_id: usize,
    pose_id: usize,
    points: Vec<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
struct RawPointsDto {
    tracks: Vec<RawTrackDto>,
}

#[derive(Serialize, Deserialize)]
struct PosesDto {
    poses: Vec<PoseDto>,
}

fn pose_to_dto(pose: &Pose) -> PoseDto {
    let r = pose.rotation();
    PoseDto {
        r: (0..3).flat_map(|i| (0..3).map(move |j| r[(i, j)])).collect(),
        t: pose.translation().iter().copied().collect(),
    }
}

fn pose_from_dto(dto: &PoseDto, ctx: &str) -> Result<Pose> {
    if dto.r.len() != 9 {
        return Err(Error::parse(ctx, format!("R has {} entries, expected 9", dto.r.len())));
    }
    if dto.t.len() != 3 {
        return Err(Error::parse(ctx, format!("t has {} entries, expected 3", dto.t.len())));
    }
    let r = Matrix3::from_row_slice(&dto.r);
    let t = Vector3::from_row_slice(&dto.t);
    Pose::new(r, t).map_err(|e| Error::parse(ctx, e.to_string()))
}

fn track_from_dto(dto: &TrackDto, ctx: &str) -> Result<TrackStats> {
    if dto.u.len() != 16 {
        return Err(Error::parse(ctx, format!("U has {} entries, expected 16", dto.u.len())));
    }
    if dto.p.len() != 4 {
        return Err(Error::parse(ctx, format!("p has {} entries, expected 4", dto.p.len())));
    }
    let u = Matrix4::from_row_slice(&dto.u);
    let p = Vector4::from_row_slice(&dto.p);
    TrackStats::from_parts(dto.plane_id, dto.pose_id, dto.n, u, p)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    body.push('\n');
    fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&body).map_err(|e| {
        Error::parse(
            format!("{}:{}:{}", path.display(), e.line(), e.column()),
            e.to_string(),
        )
    })
}

/// Writes a problem as schema-v1 JSON.
pub fn save_problem(problem: &Problem, path: impl AsRef<Path>) -> Result<()> {
    let dto = DatasetDto {
        schema_version: SCHEMA_VERSION,
        poses: problem.poses().iter().map(pose_to_dto).collect(),
        tracks: problem
            .tracks()
            .iter()
            .map(|t| {
                let u = t.second_moments();
                TrackDto {
                    plane_id: t.plane_id,
                    pose_id: t.pose_id,
                    n: t.count(),
                    u: (0..4).flat_map(|i| (0..4).map(move |j| u[(i, j)])).collect(),
                    p: t.point_sum().iter().copied().collect(),
                }
            })
            .collect(),
    };
    write_json(&dto, path.as_ref())
}

/// Loads and validates a schema-v1 problem file.
pub fn load_problem(path: impl AsRef<Path>) -> Result<Problem> {
    let path = path.as_ref();
    // check the version before strict parsing so old/new files fail clearly
    let value: serde_json::Value = read_json(path)?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(SCHEMA_VERSION) => {}
        Some(found) => {
            return Err(Error::SchemaVersionMismatch {
                found,
                expected: SCHEMA_VERSION,
            })
        }
        None => {
            return Err(Error::parse(
                path.display().to_string(),
                "missing schema_version field",
            ))
        }
    }
    let dto: DatasetDto = serde_json::from_value(value)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;

    let mut poses = Vec::with_capacity(dto.poses.len());
    for (i, p) in dto.poses.iter().enumerate() {
        poses.push(pose_from_dto(p, &format!("{}: poses[{i}]", path.display()))?);
    }
    let mut tracks = Vec::with_capacity(dto.tracks.len());
    let mut plane_count = 0;
    for (i, t) in dto.tracks.iter().enumerate() {
        let track = track_from_dto(t, &format!("{}: tracks[{i}]", path.display()))?;
        plane_count = plane_count.max(track.plane_id + 1);
        tracks.push(track);
    }
    Problem::new(poses, tracks, plane_count)
}

/// Writes the optional raw-points side file.
pub fn save_raw_points(raw: &RawPoints, path: impl AsRef<Path>) -> Result<()> {
    let dto = RawPointsDto {
        tracks: raw
            .tracks
            .iter()
            .map(|t| RawTrackDto {
                plane_id: t.plane_id,
                pose_id: t.pose_id,
                points: t.points.iter().map(|p| [p.x, p.y, p.z]).collect(),
            })
            .collect(),
    };
    write_json(&dto, path.as_ref())
}

pub fn load_raw_points(path: impl AsRef<Path>) -> Result<RawPoints> {
    let dto: RawPointsDto = read_json(path.as_ref())?;
    Ok(RawPoints {
        tracks: dto
            .tracks
            .into_iter()
            .map(|t| RawTrack {
                plane_id: t.plane_id,
                pose_id: t.pose_id,
                points: t.points.iter().map(|p| Vector3::new(p[0], p[1], p[2])).collect(),
            })
            .collect(),
    })
}

/// Writes a bare pose list (ground-truth sidecars, solver outputs).
pub fn save_poses(poses: &[Pose], path: impl AsRef<Path>) -> Result<()> {
    let dto = PosesDto {
        poses: poses.iter().map(pose_to_dto).collect(),
    };
    write_json(&dto, path.as_ref())
}

pub fn load_poses(path: impl AsRef<Path>) -> Result<Vec<Pose>> {
    let path = path.as_ref();
    let dto: PosesDto = read_json(path)?;
    dto.poses
        .iter()
        .enumerate()
        .map(|(i, p)| pose_from_dto(p, &format!("{}: poses[{i}]", path.display())))
        .collect()
}
