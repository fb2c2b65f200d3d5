use thiserror::Error;

use cocycle::averages::AveragesError;
use cocycle::eset::EsetError;
use cocycle::symbolic::SymbolicError;
use cocycle::walk::WalkError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("oracle gate failed: {0}")]
    Gate(String),
    #[error("resource budget exceeded: {0}")]
    Budget(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Gate(_) => 3,
            CliError::Budget(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o: {e}"))
    }
}

impl From<WalkError> for CliError {
    fn from(e: WalkError) -> Self {
        match e {
            WalkError::HorizonTooShort { .. }
            | WalkError::InsufficientSamples { .. }
            | WalkError::EmptyWalk => CliError::Config(e.to_string()),
            WalkError::HeightOverflow { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<EsetError> for CliError {
    fn from(e: EsetError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SymbolicError> for CliError {
    fn from(e: SymbolicError) -> Self {
        match e {
            SymbolicError::RouteMismatch { .. } => CliError::Gate(e.to_string()),
            SymbolicError::WindowExceeded { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<AveragesError> for CliError {
    fn from(e: AveragesError) -> Self {
        match e {
            AveragesError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            AveragesError::Symbolic(s) => s.into(),
            AveragesError::Walk(w) => w.into(),
            AveragesError::MissingEntries(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}
