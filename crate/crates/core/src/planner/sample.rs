use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::{PlannerConfig, PlannerError, Result, SweepAction};
use crate::grid::GridGeometry;
use crate::ot::TransportPlan;

/// Draws `cfg.num_samples` transport edges with probability proportional
/// to their mass and turns each into candidate sweeps from `X_S,i` toward
/// `X_T,j`: the full sweep first, then shortened sweeps ending at
/// `k * delta_refine` along the edge. Edges and sweeps shorter than
/// `delta_min` are dropped.
pub fn sample_candidates(
    plan: &TransportPlan,
    geometry: &GridGeometry,
    cfg: &PlannerConfig,
    rng: &mut impl Rng,
) -> Result<Vec<SweepAction>> {
    let entries = plan.entries();
    if entries.is_empty() {
        return Err(PlannerError::EmptyPlan);
    }
    let weights =
        WeightedIndex::new(entries.iter().map(|e| e.mass)).map_err(|_| PlannerError::EmptyPlan)?;
    let tol = 1e-9 * geometry.cell_size();
    let long_enough = |a: &SweepAction| a.length() >= cfg.delta_min - tol;

    let mut out = Vec::new();
    for _ in 0..cfg.num_samples {
        let e = &entries[weights.sample(rng)];
        let start = geometry.cell_center(e.source);
        let end = geometry.cell_center(e.target);
        let length = (end - start).norm();
        if length < cfg.delta_min - tol {
            continue;
        }
        let full = SweepAction::new(start, end, cfg.spatula_width)?;
        let dir = full.direction();
        let mut push = |a: SweepAction| {
            if let Some(c) = a.clipped_to(geometry) {
                if long_enough(&c) {
                    out.push(c);
                }
            }
        };
        push(full);
        let mut k = 1usize;
        loop {
            let d = k as f64 * cfg.delta_refine;
            if d >= length - tol {
                break;
            }
            if d >= cfg.delta_min - tol {
                push(SweepAction::new(start, start + dir * d, cfg.spatula_width)?);
            }
            k += 1;
        }
    }
    Ok(out)
}
