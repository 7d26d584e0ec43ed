use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the reconstruction library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty mesh")]
    EmptyMesh,

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("at least 2 views required")]
    TooFewViews,

    #[error(
        "view at azimuth {azimuth_deg}°: {file} has resolution {found:?}, expected {expected:?}"
    )]
    ResolutionMismatch {
        azimuth_deg: f64,
        file: PathBuf,
        found: (u32, u32),
        expected: (u32, u32),
    },

    #[error("image size mismatch: {0:?} vs {1:?}")]
    SizeMismatch((usize, usize), (usize, usize)),

    #[error("empty mask")]
    EmptyMask,

    #[error("silhouette topology mismatch: front has {front} boundary loops, back has {back}")]
    TopologyMismatch { front: usize, back: usize },

    #[error("non-finite upstream gradient")]
    PoisonedGradient,

    #[error("non-finite loss at iteration {iteration}")]
    NanLoss { iteration: usize },

    #[error("mesh became non-manifold after remeshing at iteration {iteration}")]
    NonManifold { iteration: usize },

    #[error("vertex count mismatch: mesh has {mesh}, targets have {targets}")]
    TargetMismatch { mesh: usize, targets: usize },

    #[error("missing view: {0}")]
    MissingView(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
