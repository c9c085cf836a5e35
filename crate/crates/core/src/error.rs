use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("simulation diverged at frame {frame}: non-finite state for body {body}")]
    Diverged { frame: usize, body: usize },

    #[error("point is behind the camera (camera-space z = {z}, near = {near})")]
    BehindCamera { z: f64, near: f64 },

    #[error("frame index {index} out of range for trajectory of {len} frames")]
    FrameOutOfRange { index: usize, len: usize },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid {modality} file {path}: {reason}")]
    Format {
        path: PathBuf,
        modality: String,
        reason: String,
    },

    #[error("object id {0} does not appear in any frame")]
    EmptyTrack(u8),

    #[error("insufficient valid frames: need {needed}, have {have}")]
    InsufficientFrames { needed: usize, have: usize },

    #[error("window is empty or shorter than {needed} samples")]
    EmptyWindow { needed: usize },

    #[error("no trackable objects")]
    NoTrackableObjects,

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(
        path: impl Into<PathBuf>,
        modality: &str,
        reason: impl Into<String>,
    ) -> Self {
        Error::Format {
            path: path.into(),
            modality: modality.to_string(),
            reason: reason.into(),
        }
    }
}
