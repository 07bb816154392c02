//! Turning an input into an [`ExecutionOutcome`].

mod external;
mod report;
pub mod sim;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub use external::{ExternalTarget, INPUT_PLACEHOLDER, REPORT_ENV, RUN_PLACEHOLDER};
pub use report::{parse_coverage_report, serialize_coverage_report, ReportError};
pub use sim::SimulatedTarget;

use crate::model::{ExecutionOutcome, Seed};

/// Failures of the measurement itself, as opposed to the target failing.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("command not found: {0}")]
    CommandNotFound(String),
    #[error("failed to start `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: io::Error,
    },
    #[error("coverage report not written: {}", .0.display())]
    ReportMissing(PathBuf),
    #[error("unparsable coverage report {}: {source}", path.display())]
    ReportParse {
        path: PathBuf,
        #[source]
        source: ReportError,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Anything that can run an input and report status plus coverage.
pub trait Target: Sync {
    fn execute(&self, input: &[u8]) -> Result<ExecutionOutcome, OracleError>;

    /// Label used in reports.
    fn name(&self) -> String;

    /// Simulated targets report modeled rather than measured time.
    fn is_simulated(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetSpec {
    External(ExternalTarget),
    Simulated(SimulatedTarget),
}

impl TargetSpec {
    /// Parses `sim:<name>`. External targets need more than a string and are
    /// built with [`ExternalTarget::new`].
    pub fn parse_simulated(spec: &str) -> Result<Self, OracleError> {
        let name = spec
            .strip_prefix("sim:")
            .ok_or_else(|| OracleError::InvalidTarget(format!("expected `sim:<name>`, got `{spec}`")))?;
        name.parse().map(TargetSpec::Simulated).map_err(OracleError::InvalidTarget)
    }

    /// `sim:<name>` for simulated targets, the command template otherwise.
    pub fn describe(&self) -> String {
        match self {
            TargetSpec::Simulated(s) => format!("sim:{}", s.name()),
            TargetSpec::External(e) => e.command_template().to_string(),
        }
    }
}

impl Target for TargetSpec {
    fn execute(&self, input: &[u8]) -> Result<ExecutionOutcome, OracleError> {
        match self {
            TargetSpec::External(e) => e.execute(input),
            TargetSpec::Simulated(s) => Ok(s.run(input)),
        }
    }

    fn name(&self) -> String {
        match self {
            TargetSpec::External(e) => e.program_name(),
            TargetSpec::Simulated(s) => s.name().to_string(),
        }
    }

    fn is_simulated(&self) -> bool {
        matches!(self, TargetSpec::Simulated(_))
    }
}

impl Target for ExternalTarget {
    fn execute(&self, input: &[u8]) -> Result<ExecutionOutcome, OracleError> {
        ExternalTarget::execute(self, input)
    }

    fn name(&self) -> String {
        self.program_name()
    }
}

impl Target for SimulatedTarget {
    fn execute(&self, input: &[u8]) -> Result<ExecutionOutcome, OracleError> {
        Ok(self.run(input))
    }

    fn name(&self) -> String {
        SimulatedTarget::name(*self).to_string()
    }

    fn is_simulated(&self) -> bool {
        true
    }
}

/// Runs `target` on the seed's bytes.
pub fn execute<T: Target + ?Sized>(target: &T, seed: &Seed) -> Result<ExecutionOutcome, OracleError> {
    target.execute(seed.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulated_targets_are_pure() {
        let seed = Seed::bytes(b"<a b='1'>text</a>".to_vec());
        for t in SimulatedTarget::ALL {
            let spec = TargetSpec::Simulated(t);
            assert_eq!(execute(&spec, &seed).unwrap(), execute(&spec, &seed).unwrap());
        }
    }

    #[test]
    fn parse_simulated_spec() {
        assert_eq!(
            TargetSpec::parse_simulated("sim:header-payload").unwrap(),
            TargetSpec::Simulated(SimulatedTarget::HeaderPayload)
        );
        assert!(TargetSpec::parse_simulated("header-payload").is_err());
        assert!(TargetSpec::parse_simulated("sim:what").is_err());
        assert_eq!(TargetSpec::Simulated(SimulatedTarget::XmlLike).describe(), "sim:xml-like");
    }
}
