//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown surgeme class `{0}`")]
    UnknownClass(String),

    #[error("format error in {path}{}: {message}", .row.map(|r| format!(" (row {r})")).unwrap_or_default())]
    Format {
        path: PathBuf,
        row: Option<usize>,
        message: String,
    },

    #[error("{0}: file contains no data rows")]
    EmptyFile(PathBuf),

    #[error("annotations overlap: [{first_start}, {first_end}] and [{second_start}, {second_end}]")]
    Overlap {
        first_start: f64,
        first_end: f64,
        second_start: f64,
        second_end: f64,
    },

    #[error("matrix is not a rotation (residual {residual:.3e})")]
    NotARotation { residual: f64 },

    #[error("zero-norm quaternion")]
    ZeroQuaternion,

    #[error("value {value} outside declared range [{min}, {max}] for {what}")]
    Range {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("segment has {0} frames; at least 2 are required")]
    TooShort(usize),

    #[error("profile `{0}` declares no joint channels")]
    JointsUnavailable(String),

    #[error("training data is empty")]
    EmptyData,

    #[error("training data contains a single class")]
    SingleClass,

    #[error("training diverged: loss became {0}")]
    Diverged(f64),

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("unsupported model file version {found} (this build reads {supported})")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("class {class} has {count} segments, fewer than the {folds} folds requested")]
    TooFewPerClass {
        class: usize,
        count: usize,
        folds: usize,
    },

    #[error("{groups} trial groups cannot fill {folds} folds")]
    TooFewGroups { groups: usize, folds: usize },

    #[error("dataset has no {0} segments")]
    MissingDomain(&'static str),

    #[error("unknown robot profile `{0}`")]
    UnknownProfile(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, row: Option<usize>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            row,
            message: message.into(),
        }
    }

    /// Stable short tag used by the command-line front end as an error prefix.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::UnknownClass(_) => "unknown-class",
            Error::Format { .. } => "format",
            Error::EmptyFile(_) => "empty-file",
            Error::Overlap { .. } => "overlap",
            Error::NotARotation { .. } => "not-a-rotation",
            Error::ZeroQuaternion => "zero-quaternion",
            Error::Range { .. } => "range",
            Error::TooShort(_) => "too-short",
            Error::JointsUnavailable(_) => "joints-unavailable",
            Error::EmptyData => "empty-data",
            Error::SingleClass => "single-class",
            Error::Diverged(_) => "diverged",
            Error::DimMismatch { .. } => "dim-mismatch",
            Error::VersionMismatch { .. } => "version-mismatch",
            Error::InvalidParams(_) => "invalid-params",
            Error::TooFewPerClass { .. } => "too-few-per-class",
            Error::TooFewGroups { .. } => "too-few-groups",
            Error::MissingDomain(_) => "missing-domain",
            Error::UnknownProfile(_) => "unknown-profile",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }
}
