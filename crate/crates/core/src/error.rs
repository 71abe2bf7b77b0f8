use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("all-zero gain map; soft aperture cannot be normalized")]
    ZeroGain,

    #[error("slice band out of bounds: {0}")]
    SliceOutOfBounds(String),

    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    #[error("fit did not converge after {iterations} evaluations ({reason})")]
    NoConvergence {
        iterations: usize,
        reason: String,
        best: Box<crate::profile::AiryFit>,
    },

    #[error("profile position ranges do not overlap")]
    DisjointRanges,

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("malformed {what} at line {line}: {reason}")]
    Parse {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    /// Numerical failures map to exit status 2, everything else to 1.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::ZeroGain | Error::DegenerateProfile(_) | Error::NoConvergence { .. } => true,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
