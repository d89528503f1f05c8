use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("plane count mismatch: expected {expected}, got {got}")]
    PlaneMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("score {value} at plane {plane}, pixel {index} lies outside [0, 1]")]
    ScoreOutOfRange {
        plane: usize,
        index: usize,
        value: f64,
    },

    #[error("label {label} at pixel {index} is not below class count {n_classes}")]
    LabelOutOfRange {
        label: u32,
        index: usize,
        n_classes: usize,
    },

    #[error("evolution unstable at iteration {iteration}: max |dphi| = {max_delta}")]
    Instability { iteration: usize, max_delta: f64 },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("malformed {format} data: {reason}")]
    Format {
        format: &'static str,
        reason: String,
    },

    #[error("{path}: line {line}: {reason}")]
    Config {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn format(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            format,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
