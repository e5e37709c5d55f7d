//! Crate-wide error type.

use thiserror::Error;

/// Unified error for every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter, configuration value, or argument is out of its domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Orbit geometry is unbounded (eccentricity at or above 1).
    #[error("unbounded orbit: eccentricity {e} >= 1")]
    UnboundedOrbit { e: f64 },

    /// An ODE integration produced a non-finite state.
    #[error("integration diverged at t = {t_ms} ms")]
    Divergence { t_ms: f64 },

    /// A correlation was requested for a signal with zero variance.
    #[error("undefined correlation: region {region} has zero variance")]
    UndefinedCorrelation { region: usize },

    /// Every raw sample was rejected by the physical filters.
    #[error("filter exhausted all {n_raw} raw samples ({detail})")]
    FilterExhausted { n_raw: usize, detail: String },

    /// Sobol sequence was asked for more dimensions than are tabulated.
    #[error("unsupported Sobol dimension {dim} (max {max})")]
    UnsupportedDimension { dim: usize, max: usize },

    /// Array or file sizes disagree with the declared shape.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A least-squares design matrix is numerically rank deficient.
    #[error("rank-deficient design: collinear inputs {inputs:?}")]
    RankDeficient { inputs: Vec<String> },

    /// A sensitivity target has no variance to apportion.
    #[error("undefined sensitivity: {0}")]
    UndefinedSensitivity(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    /// An artifact on disk is missing or does not match its manifest.
    #[error("artifact error: {0}")]
    Artifact(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn json(path: impl AsRef<std::path::Path>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
