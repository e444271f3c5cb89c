//! Randomized invariants over the public API.

use otsweep::grid::{parse_grid, write_grid};
use otsweep::planner::simple_push;
use otsweep::{
    apply_sweep, emd, repose_relax, GridGeometry, HeightMap, SimConfig, SweepAction, Vec2,
};
use proptest::prelude::*;

fn geometry() -> GridGeometry {
    GridGeometry::square(10, 0.02).unwrap()
}

fn heights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0..0.03f64], 100)
        .prop_filter("some mass", |h| h.iter().any(|&x| x > 0.0))
}

fn sweep() -> impl Strategy<Value = SweepAction> {
    (
        -0.05..0.25f64,
        -0.05..0.25f64,
        -0.05..0.25f64,
        -0.05..0.25f64,
        0.02..0.1f64,
    )
        .prop_filter("nonzero length", |(a, b, c, d, _)| {
            (a - c).hypot(b - d) > 1e-3
        })
        .prop_map(|(a, b, c, d, w)| SweepAction::new(Vec2::new(a, b), Vec2::new(c, d), w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sweeps_conserve_mass(h in heights(), a in sweep(), seed in any::<u64>(), noise in 0.0..0.1f64) {
        let map = HeightMap::new(geometry(), h).unwrap();
        let cfg = SimConfig { noise_std: noise, seed, ..SimConfig::default() };
        let out = apply_sweep(&map, &a, &cfg).unwrap().map;
        let (m0, m1) = (map.total_mass(), out.total_mass());
        prop_assert!((m0 - m1).abs() <= 1e-9 * m0);
        prop_assert!(out.heights().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn simple_push_conserves_mass(h in heights(), a in sweep()) {
        let map = HeightMap::new(geometry(), h).unwrap();
        let out = simple_push(&map, &a);
        prop_assert!((map.total_mass() - out.total_mass()).abs() <= 1e-12 * map.total_mass());
    }

    #[test]
    fn relaxation_respects_repose(h in heights()) {
        let map = HeightMap::new(geometry(), h).unwrap();
        let cfg = SimConfig { relax_iterations: 200, ..SimConfig::default() };
        let out = repose_relax(&map, &cfg);
        prop_assert!((map.total_mass() - out.total_mass()).abs() <= 1e-9 * map.total_mass());
        prop_assert!(out.max_height() <= map.max_height() + 1e-15);
    }

    #[test]
    fn grid_files_round_trip(h in heights()) {
        let map = HeightMap::new(geometry(), h).unwrap();
        prop_assert_eq!(parse_grid(&write_grid(&map)).unwrap(), map);
    }

    #[test]
    fn emd_is_symmetric_and_scale_free(a in heights(), b in heights(), s in 0.1..10.0f64) {
        let (ma, mb) = (HeightMap::new(geometry(), a).unwrap(), HeightMap::new(geometry(), b).unwrap());
        let (na, nb) = (ma.normalize().unwrap(), mb.normalize().unwrap());
        let d = emd(&na, &nb, 1.0).unwrap();
        prop_assert!((d - emd(&nb, &na, 1.0).unwrap()).abs() <= 1e-9);
        let scaled = ma.scaled(s).normalize().unwrap();
        prop_assert!((d - emd(&scaled, &nb, 1.0).unwrap()).abs() <= 1e-9);
        prop_assert!(d <= 0.18 * 2f64.sqrt() + 1e-12);
    }
}
