//! The network simplex solver against exhaustive basis enumeration.

use otsweep::ot::solve_weights;
use otsweep::{brute_force_ot, ground_cost, GridGeometry, GroundCost, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.25) {
                0.0
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// Three source cells and three target cells drawn from the default grid,
/// with the Euclidean distances between them as costs.
#[test]
fn three_by_three_matches_oracle() {
    let g = GridGeometry::default();
    let line = GridGeometry::new(3, 1, 0.02, Vec2::new(0.01, 0.01)).unwrap();
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src: Vec<Vec2> = (0..3)
            .map(|_| g.cell_center(rng.random_range(0..g.len())))
            .collect();
        let dst: Vec<Vec2> = (0..3)
            .map(|_| g.cell_center(rng.random_range(0..g.len())))
            .collect();
        let costs = src
            .iter()
            .flat_map(|s| dst.iter().map(move |d| s.distance(*d)))
            .collect();
        let cost = GroundCost::from_matrix(line, line, costs).unwrap();
        let (a, b) = (weights(&mut rng, 3), weights(&mut rng, 3));
        let fast = solve_weights(&a, &b, &cost).unwrap();
        let slow = brute_force_ot(&a, &b, &cost).unwrap();
        assert!(
            (fast.cost() - slow.cost()).abs() <= 1e-9,
            "seed {seed}: {} vs {}",
            fast.cost(),
            slow.cost()
        );
        assert!(fast.marginal_violation() <= 1e-9);
    }
}

#[test]
fn integer_costs_on_rectangular_supports() {
    for seed in 0..60 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let (n, m) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let costs: Vec<f64> = (0..n * m).map(|_| rng.random_range(0..10) as f64).collect();
        let gs = GridGeometry::new(n, 1, 0.02, Vec2::new(0.01, 0.01)).unwrap();
        let gt = GridGeometry::new(m, 1, 0.02, Vec2::new(0.01, 0.01)).unwrap();
        let cost = GroundCost::from_matrix(gs, gt, costs).unwrap();
        let (a, b) = (weights(&mut rng, n), weights(&mut rng, m));
        let fast = solve_weights(&a, &b, &cost).unwrap();
        let slow = brute_force_ot(&a, &b, &cost).unwrap();
        assert!((fast.cost() - slow.cost()).abs() <= 1e-9, "seed {seed}");
    }
}

#[test]
fn translation_invariance() {
    // The same pattern shifted by a whole number of cells on both sides
    // keeps its EMD.
    let g = GridGeometry::square(8, 0.02).unwrap();
    let cost = ground_cost(&g, &g, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let pa = weights(&mut rng, 16);
        let pb = weights(&mut rng, 16);
        let embed = |p: &[f64], dr: usize, dc: usize| {
            let mut w = vec![0.0; g.len()];
            for r in 0..4 {
                for c in 0..4 {
                    w[g.index(r + dr, c + dc)] = p[r * 4 + c];
                }
            }
            w
        };
        let base = solve_weights(&embed(&pa, 0, 0), &embed(&pb, 0, 0), &cost)
            .unwrap()
            .cost();
        let moved = solve_weights(&embed(&pa, 3, 4), &embed(&pb, 3, 4), &cost)
            .unwrap()
            .cost();
        assert!((base - moved).abs() <= 1e-12, "{base} vs {moved}");
    }
}
