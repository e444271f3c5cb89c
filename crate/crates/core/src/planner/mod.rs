//! Next-best-sweep planning from the optimal transport map.
//!
//! [`next_best_sweep`] solves the transport problem between the current and
//! the target height map, samples candidate sweeps along transport edges,
//! ranks them with [`sweep_score`] and returns the best. [`baseline_max_ot`]
//! and [`baseline_diff_map`] are the two comparison planners.

mod baselines;
mod push;
mod sample;
mod score;
mod sweep;

pub use baselines::{baseline_diff_map, baseline_max_ot, max_ot_from_plan, DIFF_MAP_ATTEMPTS};
pub use push::simple_push;
pub use sample::sample_candidates;
pub use score::{edge_heuristic, score_patch, sweep_score};
pub use sweep::{SweepAction, SweepPatch};

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{GridError, GridGeometry, HeightMap};
use crate::ot::{ground_cost, solve_ot, GroundCost, OtError, TransportPlan};

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("cell {0} is not inside the sweep patch")]
    CellOutsidePatch(usize),
    #[error("transport plan has no entries")]
    EmptyPlan,
    #[error("every transport edge is diagonal")]
    NoNonTrivialEdge,
    #[error("difference maps are empty")]
    Converged,
    #[error("no sweep of at least {0} m found after {n} attempts", n = DIFF_MAP_ATTEMPTS)]
    SamplingExhausted(f64),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error("source and target maps have different geometry")]
    GeometryMismatch,
    #[error("source mass {source_mass} and target mass {target_mass} differ")]
    UnbalancedMass { source_mass: f64, target_mass: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Ot(#[from] OtError),
}

pub type Result<T, E = PlannerError> = std::result::Result<T, E>;

/// Relative mass mismatch tolerated between source and target maps.
pub const MASS_MATCH_TOL: f64 = 1e-6;

/// Tunables shared by all three planners.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Reward weight for transport progress along the sweep.
    pub alpha_plus: f64,
    /// Penalty weight for pushing material past its destination.
    pub alpha_minus: f64,
    /// Number of transport edges drawn per planning step.
    pub num_samples: usize,
    /// Step between interpolated sweep end points, meters.
    pub delta_refine: f64,
    /// Shortest sweep considered, meters.
    pub delta_min: f64,
    pub spatula_width: f64,
    /// Earth mover's distance (meters) below which no action is needed.
    pub convergence_emd: f64,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            alpha_plus: 1.0,
            alpha_minus: 100.0,
            num_samples: 10,
            delta_refine: 0.02,
            delta_min: 0.04,
            spatula_width: 0.07,
            convergence_emd: 1e-4,
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(PlannerError::InvalidConfig(msg.to_string()));
        if !(self.alpha_plus >= 0.0 && self.alpha_plus.is_finite()) {
            return bad("alpha_plus must be nonnegative");
        }
        if !(self.alpha_minus >= 0.0 && self.alpha_minus.is_finite()) {
            return bad("alpha_minus must be nonnegative");
        }
        if self.num_samples == 0 {
            return bad("num_samples must be at least 1");
        }
        if !(self.delta_refine > 0.0 && self.delta_refine.is_finite()) {
            return bad("delta_refine must be positive");
        }
        if !(self.delta_min > 0.0 && self.delta_min.is_finite()) {
            return bad("delta_min must be positive");
        }
        if !(self.spatula_width > 0.0 && self.spatula_width.is_finite()) {
            return bad("spatula_width must be positive");
        }
        if self.convergence_emd.is_nan() || self.convergence_emd < 0.0 {
            return bad("convergence_emd must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSweep {
    pub action: SweepAction,
    pub score: f64,
}

/// Outcome of one planning step of [`next_best_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub enum SweepDecision {
    Sweep {
        action: SweepAction,
        score: f64,
        /// Every candidate in sampling order with its score.
        candidates: Vec<ScoredSweep>,
        emd: f64,
    },
    NoActionNeeded {
        emd: f64,
    },
}

impl SweepDecision {
    pub fn action(&self) -> Option<&SweepAction> {
        match self {
            SweepDecision::Sweep { action, .. } => Some(action),
            SweepDecision::NoActionNeeded { .. } => None,
        }
    }

    pub fn emd(&self) -> f64 {
        match self {
            SweepDecision::Sweep { emd, .. } | SweepDecision::NoActionNeeded { emd } => *emd,
        }
    }
}

/// Checks shared geometry and matching mass, then solves the transport
/// problem between the normalized maps.
pub fn transport_plan(
    source: &HeightMap,
    target: &HeightMap,
    cost: &GroundCost,
) -> Result<TransportPlan> {
    check_pair(source, target)?;
    let a = source.normalize()?;
    let b = target.normalize()?;
    Ok(solve_ot(&a, &b, cost)?)
}

pub(crate) fn check_pair(source: &HeightMap, target: &HeightMap) -> Result<()> {
    if source.geometry() != target.geometry() {
        return Err(PlannerError::GeometryMismatch);
    }
    let (ms, mt) = (source.total_mass(), target.total_mass());
    if ms > 0.0 && mt > 0.0 && (ms - mt).abs() > MASS_MATCH_TOL * ms.max(mt) {
        return Err(PlannerError::UnbalancedMass {
            source_mass: ms,
            target_mass: mt,
        });
    }
    Ok(())
}

/// The planner's full step: transport plan, candidate sampling, argmax.
pub fn next_best_sweep(
    source: &HeightMap,
    target: &HeightMap,
    cfg: &PlannerConfig,
    rng: &mut impl Rng,
) -> Result<SweepDecision> {
    cfg.validate()?;
    let geometry = *source.geometry();
    let cost = ground_cost(&geometry, target.geometry(), 1.0)?;
    let plan = transport_plan(source, target, &cost)?;
    select_sweep(&plan, &geometry, cfg, rng)
}

/// Planning step on a precomputed transport plan (cost = EMD at `p = 1`).
pub fn select_sweep(
    plan: &TransportPlan,
    geometry: &GridGeometry,
    cfg: &PlannerConfig,
    rng: &mut impl Rng,
) -> Result<SweepDecision> {
    let emd = plan.cost();
    if emd <= cfg.convergence_emd {
        return Ok(SweepDecision::NoActionNeeded { emd });
    }
    let candidates = sample_candidates(plan, geometry, cfg, rng)?;
    let scored = score_candidates(plan, geometry, &candidates, cfg);
    match best_candidate(&scored) {
        Some(k) => Ok(SweepDecision::Sweep {
            action: scored[k].action,
            score: scored[k].score,
            candidates: scored,
            emd,
        }),
        None => Ok(SweepDecision::NoActionNeeded { emd }),
    }
}

/// Scores every candidate; evaluation runs in parallel, output keeps input order.
pub fn score_candidates(
    plan: &TransportPlan,
    geometry: &GridGeometry,
    candidates: &[SweepAction],
    cfg: &PlannerConfig,
) -> Vec<ScoredSweep> {
    candidates
        .par_iter()
        .map(|action| ScoredSweep {
            action: *action,
            score: sweep_score(plan, action, geometry, cfg),
        })
        .collect()
}

/// Index of the highest score; earliest wins among scores equal up to a
/// relative 1e-12.
pub fn best_candidate(scored: &[ScoredSweep]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, s) in scored.iter().enumerate() {
        match best {
            None => best = Some(k),
            Some(b) => {
                let cur = scored[b].score;
                if s.score > cur + 1e-12 * cur.abs().max(s.score.abs()) {
                    best = Some(k);
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn point_map(g: &GridGeometry, cell: usize) -> HeightMap {
        let mut h = vec![0.0; g.len()];
        h[cell] = 1.0;
        HeightMap::new(*g, h).unwrap()
    }

    #[test]
    fn defaults_match_published_parameters() {
        let cfg = PlannerConfig::default();
        assert_eq!(cfg.alpha_plus, 1.0);
        assert_eq!(cfg.alpha_minus, 100.0);
        assert_eq!(cfg.num_samples, 10);
        assert_eq!(cfg.delta_refine, 0.02);
        assert_eq!(cfg.spatula_width, 0.07);
        assert!(cfg.validate().is_ok());
        let mut bad = cfg.clone();
        bad.num_samples = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn identical_maps_need_no_action() {
        let g = GridGeometry::default();
        let m = point_map(&g, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = next_best_sweep(&m, &m, &PlannerConfig::default(), &mut rng).unwrap();
        assert!(matches!(d, SweepDecision::NoActionNeeded { .. }));
    }

    #[test]
    fn point_mass_sweeps_toward_target() {
        let g = GridGeometry::default();
        let from = g.index(12, 2);
        let to = g.index(12, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = next_best_sweep(
            &point_map(&g, from),
            &point_map(&g, to),
            &PlannerConfig::default(),
            &mut rng,
        )
        .unwrap();
        let a = d.action().unwrap();
        assert!((a.start() - g.cell_center(from)).norm() < 1e-12);
        assert!((a.end() - g.cell_center(to)).norm() < 1e-9);
        assert!((d.emd() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let g = GridGeometry::default();
        let small = GridGeometry::square(5, 0.02).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = PlannerConfig::default();
        let a = point_map(&g, 0);
        assert!(matches!(
            next_best_sweep(&a, &point_map(&small, 0), &cfg, &mut rng),
            Err(PlannerError::GeometryMismatch)
        ));
        assert!(matches!(
            next_best_sweep(&a, &a.scaled(2.0), &cfg, &mut rng),
            Err(PlannerError::UnbalancedMass { .. })
        ));
        let z = HeightMap::zeros(g);
        assert!(matches!(
            next_best_sweep(&z, &z, &cfg, &mut rng),
            Err(PlannerError::Grid(GridError::ZeroMass))
        ));
    }

    #[test]
    fn ties_go_to_the_earliest_candidate() {
        let a = SweepAction::new(Vec2::ZERO, Vec2::new(1.0, 0.0), 0.1).unwrap();
        let b = SweepAction::new(Vec2::ZERO, Vec2::new(0.0, 1.0), 0.1).unwrap();
        let scored = vec![
            ScoredSweep {
                action: a,
                score: 1.0,
            },
            ScoredSweep {
                action: b,
                score: 2.0,
            },
            ScoredSweep {
                action: a,
                score: 2.0,
            },
        ];
        assert_eq!(best_candidate(&scored), Some(1));
        assert_eq!(best_candidate(&[]), None);
    }
}
