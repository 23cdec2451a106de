use std::fmt::Display;

use serde::Serialize;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("pattern is infeasible: {0}")]
    Infeasible(String),
    #[error("assumption not met: {0}")]
    Assumption(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Display) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config { .. } => 2,
            CliError::Infeasible(_) => 3,
            CliError::Assumption(_) => 4,
            CliError::Solver(_) => 5,
            CliError::NonConvergence(_) => 6,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Config { .. } => "config",
            CliError::Infeasible(_) => "infeasible",
            CliError::Assumption(_) => "assumption",
            CliError::Solver(_) => "solver",
            CliError::NonConvergence(_) => "non_convergence",
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Pipeline stage a failure is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Feasibility,
    Assumptions,
    Synthesis,
    Certificate,
    Observer,
    Simulation,
    Validation,
    Output,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub stage: Stage,
    pub error: CliError,
}

impl Failure {
    pub fn new(stage: Stage, error: CliError) -> Self {
        Self { stage, error }
    }
}
