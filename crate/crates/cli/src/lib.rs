//! Batch experiment harness for the couette toolkit: viscosity sweeps for
//! the half-life law, stability-threshold scans, linear-constant tables,
//! short-time regularization checks, the dyadic-analysis suite, and
//! plot-data emission.

pub mod config;
pub mod lp_suite;
pub mod plots;
pub mod regularization;
pub mod runs;
pub mod scan;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Core(#[from] couette_core::CoreError),
}

impl HarnessError {
    /// Process exit codes: 1 usage, 2 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Config(_) => 1,
            HarnessError::Numerical(_) | HarnessError::Core(_) => 2,
        }
    }
}
