use thiserror::Error;

/// Errors produced anywhere in the placement pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid obstacle {index}: {reason}")]
    InvalidObstacle { index: usize, reason: String },

    #[error("invalid boundary: {0}")]
    InvalidBoundary(String),

    #[error("sensor {index} is infeasible: {reason}")]
    Infeasible { index: usize, reason: String },

    #[error("sensor {index} lies outside the domain")]
    OutsideDomain { index: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("both perturbations of free coordinate {0} are infeasible")]
    DegenerateGradient(usize),

    #[error("symmetry template: {0}")]
    Symmetry(String),

    #[error("config syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown preset `{name}`; available presets: {available}")]
    UnknownPreset { name: String, available: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit status for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible { .. } | Error::OutsideDomain { .. } => 3,
            Error::Io { .. } => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
