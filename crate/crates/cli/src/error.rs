use std::path::PathBuf;

use censored_evi::bootstrap::BootstrapError;
use censored_evi::estimators::EstimateError;
use censored_evi::sample::SampleError;
use censored_evi::simulation::SimulationError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Data { path: PathBuf, source: SampleError },
    #[error("scenario file {}: {message}", path.display())]
    Scenario { path: PathBuf, message: String },
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Read { .. } | CliError::Write { .. } | CliError::Data { .. } | CliError::Scenario { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<BootstrapError> for CliError {
    fn from(e: BootstrapError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}
