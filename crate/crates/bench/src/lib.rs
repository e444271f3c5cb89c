//! Shared fixtures for the benchmarks.

use otsweep::grid::{generate_source, generate_target};
use otsweep::{GridGeometry, HeightMap, SourceKind, TargetKind, Vec2};

pub const MASS: f64 = 2e-4;

/// Default 25x25 workspace with a source of `kind` and a centered gather disc.
pub fn gather_instance(kind: SourceKind, seed: u64) -> (HeightMap, HeightMap) {
    let g = GridGeometry::default();
    let source = generate_source(kind, &g, MASS, seed).expect("valid source");
    let target = generate_target(
        &TargetKind::Gather {
            center: Vec2::new(0.25, 0.25),
            radius: 0.08,
        },
        &g,
        MASS,
    )
    .expect("valid target");
    (source, target)
}
