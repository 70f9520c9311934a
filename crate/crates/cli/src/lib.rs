//! Experiment runner: JSON configs in, reproducible CSV tables out.

pub mod config;
pub mod expr;
pub mod output;
pub mod run;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("model: {0}")]
    Model(polywind::Error),
    #[error("{0}")]
    Runtime(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration and usage errors, 3 for an infeasible model
    /// (`n * l0 <= L`), 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(polywind::Error::Infeasible { .. }) => 3,
            CliError::Model(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<polywind::Error> for CliError {
    fn from(e: polywind::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
