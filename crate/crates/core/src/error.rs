use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is out of range (must be at least 1)")]
    DimensionOutOfRange(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("grid has {nodes} nodes, above the cap of {cap}")]
    GridTooLarge { nodes: usize, cap: usize },

    #[error("density does not belong to this grid")]
    GridMismatch,

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error(
        "information matrix is singular (min/max eigenvalue ratio {ratio:.3e}); \
         the regressors do not span R^{p} on the support of the density"
    )]
    SingularInformation { p: usize, ratio: f64 },

    #[error("KL divergence undefined: new density is positive on cell {0} where the old one is zero")]
    KlUndefined(usize),

    #[error("boundary band carries only {0:.3e} of the total mass")]
    DegenerateRing(f64),

    #[error("operation requires a polar (disc) grid")]
    NotPolarGrid,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
