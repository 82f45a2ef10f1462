//! Configuration, experiment orchestration and artifact export behind the
//! `pareto-route` binary.

mod config;
mod export;
mod run;

pub use config::{
    derive_seed, EvaluationConfig, ExperimentConfig, GenerateTopology, LinkConfig,
    ProblemConfig, RadioConfig, SeedStream, TopologySource,
};
pub use export::{
    export_projections, read_archive_csv, read_archive_json, relay_map, write_archive_csv,
    write_archive_json, write_relay_map, ArchiveFile, ArchiveHeader, RelayMapRow,
    ARCHIVE_FORMAT, NEAR_PERFECT_ROBUSTNESS,
};
pub use run::{
    build_network, build_topology, evaluate_solution_file, gen_topology, run_exhaustive,
    run_search, Manifest, RunSeeds, RunSummary,
};

use thiserror::Error;

use crate::objectives::EvalError;
use crate::pareto::SearchError;
use crate::topology::TopologyError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Budget(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Search(SearchError),
    #[error("{path}: {reason}")]
    Artifact { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn field(field: &str, reason: impl std::fmt::Display) -> Self {
        Self::Config(format!("{field}: {reason}"))
    }

    pub(crate) fn artifact(path: &std::path::Path, reason: impl std::fmt::Display) -> Self {
        Self::Artifact {
            path: path.display().to_string(),
            reason: reason.to_string(),
        }
    }

    /// 2 for configuration problems, 3 for an exceeded enumeration budget,
    /// 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Budget(_) => 3,
            Self::Eval(EvalError::Config(_)) => 2,
            _ => 1,
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::BudgetExceeded { .. } => Self::Budget(e.to_string()),
            SearchError::Problem(msg) => Self::Config(msg),
            SearchError::Eval(e) => Self::Eval(e),
            other => Self::Search(other),
        }
    }
}
