use thiserror::Error;

/// Errors produced by the plane-adjustment library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("at least {needed} points are required, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("observation has no points (plane {plane_id}, pose {pose_id})")]
    EmptyObservation { plane_id: usize, pose_id: usize },

    #[error("plane {plane_id} is underconstrained: {points} points in total, need at least 3")]
    UnderconstrainedPlane { plane_id: usize, points: usize },

    #[error("points are collinear or rank-deficient; plane normal is not identifiable")]
    CollinearPoints,

    #[error("pose {pose_id} does not observe plane {plane_id}")]
    IndexNotObserved { plane_id: usize, pose_id: usize },

    #[error("cross-pose decomposition requires two distinct poses, got {pose_id} twice")]
    SamePoseIndex { pose_id: usize },

    #[error("scene configuration is infeasible: {0}")]
    InfeasibleConfig(String),

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersionMismatch { found: u64, expected: u64 },

    #[error("raw point data is missing for plane {plane_id}, pose {pose_id}")]
    MissingRawPoints { plane_id: usize, pose_id: usize },

    #[error("symmetric factorization failed (system not positive definite at current damping)")]
    FactorizationFailure,

    #[error("invalid rotation matrix: {0}")]
    InvalidRotation(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("compared reports refer to different datasets ({left} vs {right})")]
    MismatchedDatasets { left: String, right: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
