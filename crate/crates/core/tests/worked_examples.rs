//! Hand-checkable cases for each operation, through the public API.

use otsweep::harness::{ExperimentConfig, Method, TaskFamily, TaskSpec};
use otsweep::ot::{solve_weights, TransportEntry};
use otsweep::planner::{
    baseline_diff_map, baseline_max_ot, edge_heuristic, max_ot_from_plan, sweep_score, SweepPatch,
};
use otsweep::{
    ground_cost, next_best_sweep, run_episode, GridGeometry, HeightMap, PlannerConfig,
    PlannerError, SourceKind, SweepAction, TransportPlan, Vec2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: Vec2, b: Vec2) -> bool {
    (a - b).norm() < 1e-12
}

fn point(g: &GridGeometry, cell: usize) -> HeightMap {
    let mut h = vec![0.0; g.len()];
    h[cell] = 0.01;
    HeightMap::new(*g, h).unwrap()
}

#[test]
fn ground_cost_between_neighbors() {
    let g = GridGeometry::default();
    let c = ground_cost(&g, &g, 1.0).unwrap();
    assert!((c.get(g.index(0, 0), g.index(0, 1)) - 0.02).abs() < 1e-15);
    assert_eq!(c.get(5, 5), 0.0);
}

#[test]
fn push_prediction_cases() {
    let g = GridGeometry::default();
    let action = SweepAction::new(g.center_of(10, 5), g.center_of(10, 15), 0.07).unwrap();
    let patch = SweepPatch::new(action, &g);
    let (t, end) = patch.push_prediction(g.index(10, 5)).unwrap();
    assert!(close(t, action.end() - action.start()));
    assert!(close(end, action.end()));
    let (t, _) = patch.push_prediction(g.index(10, 15)).unwrap();
    assert!(close(t, Vec2::ZERO));
    // One row over: 0.02 m lateral offset is kept.
    let (_, end) = patch.push_prediction(g.index(11, 9)).unwrap();
    assert!(close(end, Vec2::new(action.end().x, action.end().y + 0.02)));
    assert!(matches!(
        patch.push_prediction(g.index(0, 0)),
        Err(PlannerError::CellOutsidePatch(_))
    ));
}

#[test]
fn heuristic_self_edge_pays_push_distance() {
    let g = GridGeometry::default();
    let cfg = PlannerConfig::default();
    let action = SweepAction::new(g.center_of(10, 5), g.center_of(10, 15), 0.07).unwrap();
    let patch = SweepPatch::new(action, &g);
    let i = g.index(10, 11);
    let r = edge_heuristic(&patch, i, i, &g, &cfg).unwrap();
    assert!((r + cfg.alpha_minus * 0.08).abs() < 1e-9, "{r}");
    let aligned = edge_heuristic(&patch, g.index(10, 5), g.index(10, 15), &g, &cfg).unwrap();
    assert!((aligned - cfg.alpha_plus * 0.2).abs() < 1e-12);
}

#[test]
fn score_matches_dense_double_loop() {
    let g = GridGeometry::square(3, 0.02).unwrap();
    let cost = ground_cost(&g, &g, 1.0).unwrap();
    let cfg = PlannerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..20 {
        let mut a: Vec<f64> = (0..9).map(|_| rng.random::<f64>()).collect();
        let mut b: Vec<f64> = (0..9).map(|_| rng.random::<f64>()).collect();
        let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
        a.iter_mut().for_each(|x| *x /= sa);
        b.iter_mut().for_each(|x| *x /= sb);
        let plan = solve_weights(&a, &b, &cost).unwrap();
        let action = SweepAction::new(g.center_of(0, 0), g.center_of(2, 1), 0.03).unwrap();
        let patch = SweepPatch::new(action, &g);
        let mut dense = vec![0.0; 81];
        for e in plan.entries() {
            dense[e.source * 9 + e.target] += e.mass;
        }
        let mut expected = 0.0;
        for i in 0..9 {
            for j in 0..9 {
                if patch.contains(i) && dense[i * 9 + j] > 0.0 {
                    expected += dense[i * 9 + j] * edge_heuristic(&patch, i, j, &g, &cfg).unwrap();
                }
            }
        }
        assert!((sweep_score(&plan, &action, &g, &cfg) - expected).abs() < 1e-12);
    }
}

#[test]
fn point_mass_sweep_heads_for_target() {
    let g = GridGeometry::default();
    let (s, t) = (g.index(12, 2), g.index(12, 12));
    let d = next_best_sweep(
        &point(&g, s),
        &point(&g, t),
        &PlannerConfig::default(),
        &mut ChaCha8Rng::seed_from_u64(4),
    )
    .unwrap();
    let a = d.action().expect("a sweep");
    assert!(close(a.start(), g.cell_center(s)));
    assert!(
        close(a.end(), g.cell_center(t)),
        "full length when nothing overshoots"
    );
}

#[test]
fn max_ot_picks_heaviest_edge_with_lexicographic_ties() {
    let g = GridGeometry::square(4, 0.02).unwrap();
    let cost = ground_cost(&g, &g, 1.0).unwrap();
    let cfg = PlannerConfig::default();
    let plan = |m: [f64; 2]| {
        let entries = vec![
            TransportEntry {
                source: 0,
                target: 3,
                mass: m[0],
            },
            TransportEntry {
                source: 12,
                target: 15,
                mass: m[1],
            },
        ];
        let mut a = vec![0.0; 16];
        let mut b = vec![0.0; 16];
        (a[0], a[12], b[3], b[15]) = (m[0], m[1], m[0], m[1]);
        TransportPlan::from_entries(entries, &cost, a, b)
    };
    let pick = max_ot_from_plan(&plan([0.3, 0.7]), &g, &cfg).unwrap();
    assert!(close(pick.start(), g.cell_center(12)));
    let tie = max_ot_from_plan(&plan([0.5, 0.5]), &g, &cfg).unwrap();
    assert!(close(tie.start(), g.cell_center(0)));
    let same = point(&g, 5);
    assert!(matches!(
        baseline_max_ot(&same, &same, &cfg),
        Err(PlannerError::NoNonTrivialEdge)
    ));
}

#[test]
fn diff_map_with_single_surplus_and_deficit() {
    let g = GridGeometry::default();
    let (s, t) = (g.index(3, 3), g.index(20, 20));
    let cfg = PlannerConfig::default();
    for seed in 0..5 {
        let a = baseline_diff_map(
            &point(&g, s),
            &point(&g, t),
            &cfg,
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
        .unwrap();
        assert!(close(a.start(), g.cell_center(s)) && close(a.end(), g.cell_center(t)));
    }
    let same = point(&g, s);
    assert!(matches!(
        baseline_diff_map(&same, &same, &cfg, &mut ChaCha8Rng::seed_from_u64(0)),
        Err(PlannerError::Converged)
    ));
}

#[test]
fn one_blob_gather_makes_progress() {
    let mut spec = TaskSpec::gather(SourceKind::OneBlob, Method::Ours, 11);
    spec.iterations = 30;
    let r = run_episode(&spec).unwrap();
    let (first, last) = (
        r.metrics.first().unwrap().emd,
        r.metrics.last().unwrap().emd,
    );
    assert!(last < first, "{first} -> {last}");
    assert!(r.steps.len() <= 30);
}

#[test]
fn default_grid_has_95_tasks_per_method() {
    let jobs = ExperimentConfig::default().jobs().unwrap();
    for m in Method::ALL {
        let mine: Vec<_> = jobs.iter().filter(|j| j.spec.method == m).collect();
        let letters = mine
            .iter()
            .filter(|j| j.spec.target.family() == TaskFamily::Letter)
            .count();
        assert_eq!(mine.len() - letters, 95);
        assert_eq!(letters, 6);
    }
}
