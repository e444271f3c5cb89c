use super::{PlannerConfig, Result, SweepAction, SweepPatch};
use crate::grid::GridGeometry;
use crate::ot::TransportPlan;

/// Agreement between the push prediction for source cell `i` and the
/// transport edge `i -> j`:
///
/// `r = alpha_plus * max(n . t_edge, 0) + alpha_minus * min(n . t_error, 0)`
///
/// with `n` the sweep direction, `t_edge = X_T,j - X_S,i` and
/// `t_error = X_T,j - predicted_end(i)`. The second term is negative exactly
/// when the push carries the material past `X_T,j`.
pub fn edge_heuristic(
    patch: &SweepPatch,
    i: usize,
    j: usize,
    target_geometry: &GridGeometry,
    cfg: &PlannerConfig,
) -> Result<f64> {
    patch.push_prediction(i)?;
    Ok(edge_value(patch, i, j, target_geometry, cfg))
}

fn edge_value(
    patch: &SweepPatch,
    i: usize,
    j: usize,
    target_geometry: &GridGeometry,
    cfg: &PlannerConfig,
) -> f64 {
    let n = patch.direction();
    let (_, predicted_end) = patch.push_unchecked(i);
    let xs = patch.geometry().cell_center(i);
    let xt = target_geometry.cell_center(j);
    let progress = n.dot(xt - xs);
    let overshoot = n.dot(xt - predicted_end);
    cfg.alpha_plus * progress.max(0.0) + cfg.alpha_minus * overshoot.min(0.0)
}

/// `g(T, a) = sum_{i in P} sum_j T_ij r(i, j)` over the plan's positive entries.
pub fn sweep_score(
    plan: &TransportPlan,
    action: &SweepAction,
    geometry: &GridGeometry,
    cfg: &PlannerConfig,
) -> f64 {
    score_patch(plan, &SweepPatch::new(*action, geometry), geometry, cfg)
}

pub fn score_patch(
    plan: &TransportPlan,
    patch: &SweepPatch,
    target_geometry: &GridGeometry,
    cfg: &PlannerConfig,
) -> f64 {
    plan.entries()
        .iter()
        .filter(|e| patch.contains(e.source))
        .map(|e| e.mass * edge_value(patch, e.source, e.target, target_geometry, cfg))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::{ground_cost, TransportEntry};
    use crate::planner::PlannerError;

    fn setup() -> (GridGeometry, SweepPatch, PlannerConfig) {
        let g = GridGeometry::default();
        let action = SweepAction::new(g.center_of(10, 5), g.center_of(10, 15), 0.07).unwrap();
        (g, SweepPatch::new(action, &g), PlannerConfig::default())
    }

    #[test]
    fn aligned_edge_earns_its_length() {
        let (g, patch, cfg) = setup();
        let r = edge_heuristic(&patch, g.index(10, 5), g.index(10, 15), &g, &cfg).unwrap();
        assert!((r - 0.2).abs() < 1e-12);
    }

    #[test]
    fn backwards_edge_is_penalized() {
        let (g, patch, cfg) = setup();
        // Cell at column 8 sent back to column 6; predicted end is column 15.
        let r = edge_heuristic(&patch, g.index(10, 8), g.index(10, 6), &g, &cfg).unwrap();
        let expected = cfg.alpha_minus * -(0.18);
        assert!((r - expected).abs() < 1e-9);
        assert!(r < 0.0);
    }

    #[test]
    fn self_edge_penalized_by_push_distance() {
        let (g, patch, cfg) = setup();
        // Column 12 pushed to column 15: d = 0.06.
        let i = g.index(10, 12);
        let r = edge_heuristic(&patch, i, i, &g, &cfg).unwrap();
        assert!((r + cfg.alpha_minus * 0.06).abs() < 1e-9);
        assert!(matches!(
            edge_heuristic(&patch, g.index(0, 0), i, &g, &cfg),
            Err(PlannerError::CellOutsidePatch(_))
        ));
    }

    #[test]
    fn score_examples() {
        let (g, patch, cfg) = setup();
        let cost = ground_cost(&g, &g, 1.0).unwrap();
        let mut a = vec![0.0; g.len()];
        let mut b = vec![0.0; g.len()];
        let (i, j) = (g.index(10, 5), g.index(10, 15));
        a[i] = 1.0;
        b[j] = 1.0;
        let plan = TransportPlan::from_entries(
            vec![TransportEntry {
                source: i,
                target: j,
                mass: 1.0,
            }],
            &cost,
            a.clone(),
            b.clone(),
        );
        let g_val = sweep_score(&plan, patch.action(), &g, &cfg);
        assert!((g_val - 0.2).abs() < 1e-12);

        let away = SweepAction::new(g.center_of(20, 20), g.center_of(20, 10), 0.07).unwrap();
        assert_eq!(sweep_score(&plan, &away, &g, &cfg), 0.0);
    }
}
