//! Closed-loop episodes and seeded experiment batches.

pub mod config;
mod episode;
mod experiment;
mod seed;
mod task;

pub use config::ConfigFile;
pub use episode::{
    plan_action, run_episode, run_episode_on, EpisodeRecord, EpisodeStep, StopReason,
};
pub use experiment::{run_experiment, EpisodeJob, ExperimentConfig, ExperimentOutput, SepGroup};
pub use seed::{fnv1a, mix_seed, stable_seed};
pub use task::{Method, TargetSpec, TaskFamily, TaskSpec};

use thiserror::Error;

use crate::grid::GridError;
use crate::metrics::MetricsError;
use crate::ot::OtError;
use crate::planner::PlannerError;
use crate::sim::SimError;

/// Material volume of generated tasks (cubic meters).
pub const DEFAULT_TOTAL_MASS: f64 = 2e-4;
pub const DEFAULT_GATHER_RADIUS: f64 = 0.08;
pub const DEFAULT_SEP_RADIUS: f64 = 0.05;
/// Attempts at placing randomized target discs before giving up.
pub const PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {field}: {message}")]
    Config {
        path: String,
        field: String,
        message: String,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Ot(#[from] OtError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("episode {episode}, iteration {iteration}: {source}")]
    Episode {
        episode: String,
        iteration: usize,
        #[source]
        source: Box<HarnessError>,
    },
}

impl HarnessError {
    /// Configuration problems, as opposed to failures while running.
    pub fn is_config(&self) -> bool {
        match self {
            HarnessError::Config { .. } => true,
            HarnessError::Episode { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
