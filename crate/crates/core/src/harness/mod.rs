//! Configuration loading, seeded experiment runs, bound verification and
//! CSV output.

pub mod config;
pub mod experiment;
pub mod output;
pub mod verify;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig, PolicyKind};
pub use experiment::{run_experiment, ExperimentOutcome, Instance, PolicyRun};
pub use output::{format_number, write_outputs, OutputFiles};
pub use verify::{bounds_summary, verify_bounds, Verdict, VerifyReport};

use crate::bounds::BoundError;
use crate::error::SolverError;
use crate::metrics::MetricsError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("parameter selection: {0}")]
    Params(BoundError),
    #[error(transparent)]
    Solver(SolverError),
    #[error("{policy} failed: {message}")]
    PolicyFailed { policy: PolicyKind, message: String },
    #[error("metrics: {0}")]
    Metrics(MetricsError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {message}")]
    Csv { path: PathBuf, message: String },
}

impl HarnessError {
    pub(crate) fn metrics(e: MetricsError) -> Self {
        HarnessError::Metrics(e)
    }

    pub(crate) fn csv(path: &Path, e: csv::Error) -> Self {
        HarnessError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    /// Process exit status: 2 for configuration problems, 3 for solver
    /// failures, 1 for output errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Params(_) => 2,
            HarnessError::Solver(_) | HarnessError::PolicyFailed { .. } | HarnessError::Metrics(_) => 3,
            HarnessError::Io { .. } | HarnessError::Csv { .. } => 1,
        }
    }
}

pub const EXIT_BOUND_FAILURE: i32 = 4;
pub const EXIT_SOLVER_FAILURE: i32 = 3;
