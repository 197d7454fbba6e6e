//! Command-line surface for the universal Wyner-Ziv toolkit: problem files,
//! bound sweeps, the two-decoder comparison and coding simulations.

pub mod commands;
pub mod output;
pub mod spec;

use std::path::PathBuf;

use thiserror::Error;

pub use spec::{ProblemSpec, Resolved, SpecError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Spec(#[from] SpecError),

    #[error(transparent)]
    Core(#[from] wzrd_core::Error),

    #[error("non-finite value {0} in output")]
    NonFinite(f64),

    #[error("cannot serialize report: {0}")]
    Json(serde_json::Error),
}

pub mod exit {
    pub const IO: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const SOLVER: i32 = 4;
    pub const CAP: i32 = 5;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Csv { .. } | CliError::Json(_) => exit::IO,
            CliError::Usage(_) => exit::USAGE,
            CliError::Spec(_) => exit::PARSE,
            CliError::Core(wzrd_core::Error::CapExceeded(_)) => exit::CAP,
            CliError::Core(_) | CliError::NonFinite(_) => exit::SOLVER,
        }
    }
}

/// Reads and parses a problem file.
pub fn load_spec(path: &std::path::Path) -> Result<ProblemSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    ProblemSpec::parse(&text).map_err(|e| match e {
        SpecError::Parse(m) => SpecError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
    .map_err(CliError::from)
}
