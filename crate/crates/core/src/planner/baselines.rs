//! Comparison planners: strongest transport edge, and difference-map sampling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::{check_pair, transport_plan, PlannerConfig, PlannerError, Result, SweepAction};
use crate::grid::{GridGeometry, HeightMap};
use crate::ot::{ground_cost, TransportPlan};

/// Resampling budget of [`baseline_diff_map`].
pub const DIFF_MAP_ATTEMPTS: usize = 100;

/// Difference-map mass below this counts as empty.
const EMPTY_DIFFERENCE: f64 = 1e-12;

/// Sweep along the heaviest transport edge whose end points differ.
pub fn baseline_max_ot(
    source: &HeightMap,
    target: &HeightMap,
    cfg: &PlannerConfig,
) -> Result<SweepAction> {
    let geometry = *source.geometry();
    let cost = ground_cost(&geometry, target.geometry(), 1.0)?;
    let plan = transport_plan(source, target, &cost)?;
    max_ot_from_plan(&plan, &geometry, cfg)
}

/// Ties go to the lexicographically smallest `(i, j)`.
pub fn max_ot_from_plan(
    plan: &TransportPlan,
    geometry: &GridGeometry,
    cfg: &PlannerConfig,
) -> Result<SweepAction> {
    let best = plan
        .entries()
        .iter()
        .filter(|e| geometry.cell_center(e.source) != geometry.cell_center(e.target))
        .fold(
            None,
            |best: Option<&crate::ot::TransportEntry>, e| match best {
                Some(b)
                    if b.mass > e.mass
                        || (b.mass == e.mass && (b.source, b.target) <= (e.source, e.target)) =>
                {
                    Some(b)
                }
                _ => Some(e),
            },
        )
        .ok_or(PlannerError::NoNonTrivialEdge)?;
    SweepAction::new(
        geometry.cell_center(best.source),
        geometry.cell_center(best.target),
        cfg.spatula_width,
    )
}

/// Start drawn from the normalized surplus `max(a - b, 0)`, end from the
/// normalized deficit `max(b - a, 0)`; redrawn while shorter than
/// `delta_min`.
pub fn baseline_diff_map(
    source: &HeightMap,
    target: &HeightMap,
    cfg: &PlannerConfig,
    rng: &mut impl Rng,
) -> Result<SweepAction> {
    check_pair(source, target)?;
    let a = source.normalize()?;
    let b = target.normalize()?;
    let excess: Vec<f64> = a
        .weights()
        .iter()
        .zip(b.weights())
        .map(|(s, t)| (s - t).max(0.0))
        .collect();
    let lack: Vec<f64> = a
        .weights()
        .iter()
        .zip(b.weights())
        .map(|(s, t)| (t - s).max(0.0))
        .collect();
    if excess.iter().sum::<f64>() <= EMPTY_DIFFERENCE
        || lack.iter().sum::<f64>() <= EMPTY_DIFFERENCE
    {
        return Err(PlannerError::Converged);
    }
    let starts = WeightedIndex::new(&excess).map_err(|_| PlannerError::Converged)?;
    let ends = WeightedIndex::new(&lack).map_err(|_| PlannerError::Converged)?;
    let geometry = source.geometry();
    let tol = 1e-9 * geometry.cell_size();
    for _ in 0..DIFF_MAP_ATTEMPTS {
        let start = geometry.cell_center(starts.sample(rng));
        let end = geometry.cell_center(ends.sample(rng));
        if (end - start).norm() >= cfg.delta_min - tol {
            return SweepAction::new(start, end, cfg.spatula_width);
        }
    }
    Err(PlannerError::SamplingExhausted(cfg.delta_min))
}
