//! Experiment plans, verification suites and PMF inspection behind the
//! `entropic-clt` binary.
//!
//! Exit codes: [`EXIT_OK`] when every hard assertion holds, [`EXIT_USAGE`]
//! for bad arguments, plans or I/O, and [`EXIT_ASSERTION`] when a hard
//! assertion fails.

pub mod inspect;
pub mod plan;
pub mod run;
pub mod verify;

use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "ENTROPIC_CLT_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("unknown suite {0:?}; expected one of lemma31, prop31, prop32, decomposition, pinsker, dynamics")]
    UnknownSuite(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Library(#[from] entropic_clt::Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses the thread cap from the value of [`THREADS_ENV`].
pub fn parse_thread_cap(value: &str) -> CliResult<usize> {
    match value.trim().parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(CliError::ConfigInvalid(format!(
            "{THREADS_ENV} must be a positive integer, got {value:?}"
        ))),
    }
}
