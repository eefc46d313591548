use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed depth file. `line` is 1-based for text formats, `offset` is a
    /// byte offset for binary ones.
    #[error("parse error at {location}: {message}")]
    Parse { location: Location, message: String },

    #[error("image must be at least 3x3, got {width}x{height}")]
    Dimension { width: usize, height: usize },

    #[error("{0}")]
    InvalidImage(String),

    #[error("crop rows {row_start}..{row_end}, cols {col_start}..{col_end} out of bounds for {width}x{height} image")]
    CropBounds {
        row_start: usize,
        row_end: usize,
        col_start: usize,
        col_end: usize,
        width: usize,
        height: usize,
    },

    #[error("no point of the cloud falls inside the grid extents")]
    EmptyProjection,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid synthetic face: {0}")]
    FaceSpec(String),

    #[error("nose not found: {0}")]
    NoseNotFound(String),

    #[error("eye corners not found: {0}")]
    EyeCornersNotFound(String),

    #[error("manifest error: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Offset(usize),
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Offset(n) => write!(f, "byte offset {n}"),
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse_line(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            location: Location::Line(line),
            message: message.into(),
        }
    }

    pub(crate) fn parse_offset(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            location: Location::Offset(offset),
            message: message.into(),
        }
    }

    /// True for failures of the landmarking stages (as opposed to bad input
    /// or environment problems).
    /// Prefixes the message of a pipeline failure with `what`.
    pub fn context(self, what: &str) -> Self {
        match self {
            Error::NoseNotFound(m) => Error::NoseNotFound(format!("{what}: {m}")),
            Error::EyeCornersNotFound(m) => Error::EyeCornersNotFound(format!("{what}: {m}")),
            other => other,
        }
    }

    pub fn is_pipeline_failure(&self) -> bool {
        matches!(self, Error::NoseNotFound(_) | Error::EyeCornersNotFound(_))
    }
}
