use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the registration toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("insufficient travel: path length {traveled:.3} m is below the required {required:.3} m")]
    InsufficientTravel { traveled: f64, required: f64 },

    #[error("parse error in {source_name}{}: {message}", line_suffix(*line))]
    Parse {
        source_name: String,
        /// 1-based; 0 for binary inputs.
        line: usize,
        message: String,
    },

    #[error("wall model contains no walls")]
    EmptyModel,

    #[error("no wall lies within the scan radius")]
    EmptyScene,

    #[error("triplet is degenerate (coincident or collinear corners)")]
    DegenerateTriplet,

    #[error("descriptor resolution mismatch: ({0}, {1}) vs ({2}, {3})")]
    ResolutionMismatch(f64, f64, f64, f64),

    #[error("unsupported file format or version: {0}")]
    VersionMismatch(String),

    #[error("vote grid holds no votes")]
    EmptyGrid,

    #[error("submap has no non-ground points to score")]
    EmptySubmap,

    #[error("no pose candidates to select from")]
    NoCandidates,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn line_suffix(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" at line {line}")
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse { source_name: source_name.into(), line, message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
