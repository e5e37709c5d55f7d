//! CLI-level errors with process exit codes: 2 for configuration problems,
//! 3 for missing or inconsistent data artifacts, 4 for numerical failures.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl From<fixfit::Error> for CliError {
    fn from(e: fixfit::Error) -> Self {
        use fixfit::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidInput(_) | E::UnsupportedDimension { .. } => CliError::Config(msg),
            E::ShapeMismatch(_) | E::Artifact(_) | E::Io { .. } | E::Json { .. } => {
                CliError::Data(msg)
            }
            E::UnboundedOrbit { .. }
            | E::Divergence { .. }
            | E::UndefinedCorrelation { .. }
            | E::FilterExhausted { .. }
            | E::RankDeficient { .. }
            | E::UndefinedSensitivity(_)
            | E::TrainingDiverged { .. } => CliError::Numeric(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(CliError::config("x").exit_code(), 2);
        assert_eq!(CliError::data("x").exit_code(), 3);
        assert_eq!(CliError::Numeric("x".into()).exit_code(), 4);
    }

    #[test]
    fn core_errors_classify_by_kind() {
        let config: CliError = fixfit::Error::invalid("bad knob").into();
        assert_eq!(config.exit_code(), 2);
        let data: CliError = fixfit::Error::Artifact("missing file".into()).into();
        assert_eq!(data.exit_code(), 3);
        let numeric: CliError = fixfit::Error::Divergence { t_ms: 1.0 }.into();
        assert_eq!(numeric.exit_code(), 4);
        let numeric: CliError = fixfit::Error::TrainingDiverged { epoch: 3 }.into();
        assert_eq!(numeric.exit_code(), 4);
    }
}
