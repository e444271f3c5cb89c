//! Sweep planning for granular material on height maps.
//!
//! Transport plans between the current and the desired height map rank
//! straight-line sweeps of a spatula; a cellular push simulator closes the
//! loop, and a harness runs seeded method comparisons.
//!
//! ```
//! use otsweep::grid::{generate_source, generate_target, GridGeometry, SourceKind, TargetKind};
//! use otsweep::planner::{next_best_sweep, PlannerConfig};
//! use rand::SeedableRng;
//!
//! let g = GridGeometry::default();
//! let source = generate_source(SourceKind::Uniform, &g, 1e-3, 0).unwrap();
//! let target = generate_target(&TargetKind::Gather { center: g.workspace_center(), radius: 0.08 }, &g, 1e-3).unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let decision = next_best_sweep(&source, &target, &PlannerConfig::default(), &mut rng).unwrap();
//! assert!(decision.action().is_some());
//! ```

pub mod geom;
pub mod grid;
pub mod harness;
pub mod metrics;
pub mod ot;
pub mod planner;
pub mod sim;

pub use geom::Vec2;
pub use grid::{
    GridError, GridGeometry, HeightMap, NormalizedDistribution, SourceKind, TargetKind,
};
pub use harness::{
    run_episode, run_experiment, EpisodeRecord, ExperimentConfig, HarnessError, Method, TaskSpec,
};
pub use metrics::{iou, MetricRecord, MetricSeries};
pub use ot::{brute_force_ot, emd, ground_cost, solve_ot, GroundCost, OtError, TransportPlan};
pub use planner::{next_best_sweep, PlannerConfig, PlannerError, SweepAction, SweepDecision};
pub use sim::{apply_sweep, repose_relax, SimConfig, SimError};
