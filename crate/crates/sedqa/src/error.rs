//! Crate-wide error type.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// I/O failure, annotated with the path that caused it.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed content in an input file, located by line number.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// A value or structure that fails validation outside of file parsing.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A posterior outside [0, 1] in a score matrix.
    #[error("clip {clip_id}: score {value} at frame {frame}, class {class} is outside [0, 1]")]
    ScoreOutOfRange {
        clip_id: String,
        frame: usize,
        class: usize,
        value: f64,
    },

    /// Calibration cannot be fit without both target and non-target frames.
    #[error(
        "calibration fit needs both target and non-target frames \
         (got {n_target} targets, {n_nontarget} non-targets)"
    )]
    SingleClassFit { n_target: usize, n_nontarget: usize },

    /// An item that has no prediction when a report is requested.
    #[error("no prediction for item {0}")]
    MissingPrediction(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
