use std::process::ExitCode;

use seedtrim::fuzzer::CampaignError;
use seedtrim::reducer::ReduceError;
use seedtrim::OracleError;

/// Errors grouped by the exit code they map to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("target error: {0}")]
    Target(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Target(_) => ExitCode::from(3),
            CliError::Other(_) => ExitCode::from(1),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Target(e.to_string())
    }
}

impl From<ReduceError> for CliError {
    fn from(e: ReduceError) -> Self {
        match e {
            ReduceError::EmptySeed => CliError::Usage(e.to_string()),
            other => CliError::Target(other.to_string()),
        }
    }
}

impl From<CampaignError> for CliError {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::InvalidConfig(msg) => CliError::Usage(msg),
            CampaignError::Observer { .. } => CliError::Other(anyhow::Error::new(e)),
            other => CliError::Target(other.to_string()),
        }
    }
}
