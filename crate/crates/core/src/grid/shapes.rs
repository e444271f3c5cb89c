//! Seeded source distributions and rasterized target shapes.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::font::{glyph, GLYPH_COLS, GLYPH_ROWS};
use super::{GridError, GridGeometry, HeightMap, Result};
use crate::geom::Vec2;

/// Radius of the single blob source, meters.
pub const DEFAULT_BLOB_RADIUS: f64 = 0.10;
/// Radius of each disc in the two- and four-blob sources, meters.
pub const DEFAULT_MULTI_BLOB_RADIUS: f64 = 0.07;
/// Spread of the centered Gaussian mound, meters.
pub const DEFAULT_GAUSSIAN_SIGMA: f64 = 0.10;

const BLOB_PLACEMENT_TRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceKind {
    OneBlob,
    TwoBlobs,
    FourBlobs,
    Gaussian,
    Uniform,
}

impl SourceKind {
    pub const ALL: [SourceKind; 5] = [
        SourceKind::OneBlob,
        SourceKind::TwoBlobs,
        SourceKind::FourBlobs,
        SourceKind::Gaussian,
        SourceKind::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SourceKind::OneBlob => "one_blob",
            SourceKind::TwoBlobs => "two_blobs",
            SourceKind::FourBlobs => "four_blobs",
            SourceKind::Gaussian => "gaussian",
            SourceKind::Uniform => "uniform",
        }
    }

    fn blobs(self) -> Option<(usize, f64)> {
        match self {
            SourceKind::OneBlob => Some((1, DEFAULT_BLOB_RADIUS)),
            SourceKind::TwoBlobs => Some((2, DEFAULT_MULTI_BLOB_RADIUS)),
            SourceKind::FourBlobs => Some((4, DEFAULT_MULTI_BLOB_RADIUS)),
            _ => None,
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "one_blob" | "1-blob" => Ok(SourceKind::OneBlob),
            "two_blobs" | "2-blobs" => Ok(SourceKind::TwoBlobs),
            "four_blobs" | "4-blobs" => Ok(SourceKind::FourBlobs),
            "gaussian" => Ok(SourceKind::Gaussian),
            "uniform" => Ok(SourceKind::Uniform),
            other => Err(format!("unknown source kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetKind {
    /// Uniform disc.
    Gather { center: Vec2, radius: f64 },
    /// Equal-mass disjoint discs, one per center.
    SepN { centers: Vec<Vec2>, radius: f64 },
    /// Dot-matrix letter scaled to the workspace.
    Letter { glyph: char },
}

/// Builds a seeded initial distribution carrying `total_mass` cubic meters.
pub fn generate_source(
    kind: SourceKind,
    geometry: &GridGeometry,
    total_mass: f64,
    seed: u64,
) -> Result<HeightMap> {
    check_mass(total_mass)?;
    let weights = match kind.blobs() {
        Some((count, radius)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let centers = place_blobs(geometry, count, radius, &mut rng)?;
            let mut w = vec![0.0; geometry.len()];
            for c in centers {
                let cells = disc_cells(geometry, c, radius);
                let share = 1.0 / (count as f64 * cells.len() as f64);
                for i in cells {
                    w[i] += share;
                }
            }
            w
        }
        None if kind == SourceKind::Gaussian => {
            let center = geometry.workspace_center();
            let two_var = 2.0 * DEFAULT_GAUSSIAN_SIGMA * DEFAULT_GAUSSIAN_SIGMA;
            geometry
                .centers()
                .map(|p| (-(p - center).dot(p - center) / two_var).exp())
                .collect()
        }
        None => vec![1.0; geometry.len()],
    };
    from_weights(geometry, weights, total_mass)
}

/// Builds a target map carrying `total_mass` cubic meters.
pub fn generate_target(
    kind: &TargetKind,
    geometry: &GridGeometry,
    total_mass: f64,
) -> Result<HeightMap> {
    check_mass(total_mass)?;
    let mut weights = vec![0.0; geometry.len()];
    match kind {
        TargetKind::Gather { center, radius } => {
            let cells = disc_cells(geometry, *center, *radius);
            if cells.is_empty() {
                return Err(GridError::InfeasibleGeometry(format!(
                    "gather disc at {center} with radius {radius} covers no cell"
                )));
            }
            for i in cells {
                weights[i] = 1.0;
            }
        }
        TargetKind::SepN { centers, radius } => {
            if centers.is_empty() {
                return Err(GridError::InfeasibleGeometry(
                    "separation needs at least one disc".into(),
                ));
            }
            for (a, ca) in centers.iter().enumerate() {
                for cb in &centers[a + 1..] {
                    if ca.distance(*cb) < 2.0 * radius {
                        return Err(GridError::InfeasibleGeometry(format!(
                            "separation discs at {ca} and {cb} overlap"
                        )));
                    }
                }
            }
            for c in centers {
                let cells = disc_cells(geometry, *c, *radius);
                if cells.is_empty() {
                    return Err(GridError::InfeasibleGeometry(format!(
                        "separation disc at {c} covers no cell"
                    )));
                }
                let share = 1.0 / (centers.len() as f64 * cells.len() as f64);
                for i in cells {
                    weights[i] += share;
                }
            }
        }
        TargetKind::Letter { glyph: ch } => {
            let cells = letter_cells(geometry, *ch)?;
            for i in cells {
                weights[i] = 1.0;
            }
        }
    }
    from_weights(geometry, weights, total_mass)
}

/// Indices of cells whose centers lie within `radius` of `center`.
pub fn disc_cells(geometry: &GridGeometry, center: Vec2, radius: f64) -> Vec<usize> {
    let tol = 1e-12 * geometry.cell_size();
    (0..geometry.len())
        .filter(|&i| geometry.cell_center(i).distance(center) <= radius + tol)
        .collect()
}

/// Cells covered by the dot-matrix rasterization of `ch`, sorted by index.
///
/// Each dot becomes a `scale x scale` block, with `scale` the largest integer
/// that leaves at least half a glyph column and row of margin; the glyph is
/// centered and drawn upright (glyph row 0 at the highest `y`).
pub fn letter_cells(geometry: &GridGeometry, ch: char) -> Result<Vec<usize>> {
    let dots =
        glyph(ch).ok_or_else(|| GridError::InfeasibleGeometry(format!("no glyph for '{ch}'")))?;
    let (w, h) = (geometry.width_cells(), geometry.height_cells());
    let scale = (w / (GLYPH_COLS + 1)).min(h / (GLYPH_ROWS + 1));
    if scale == 0 {
        return Err(GridError::InfeasibleGeometry(format!(
            "{w}x{h} grid is too small for a {GLYPH_COLS}x{GLYPH_ROWS} glyph"
        )));
    }
    let col0 = (w - GLYPH_COLS * scale) / 2;
    let row0 = (h - GLYPH_ROWS * scale) / 2;
    let mut cells = Vec::new();
    for (gr, row) in dots.iter().enumerate() {
        for (gc, &on) in row.iter().enumerate() {
            if !on {
                continue;
            }
            let base_row = row0 + (GLYPH_ROWS - 1 - gr) * scale;
            let base_col = col0 + gc * scale;
            for dr in 0..scale {
                for dc in 0..scale {
                    cells.push(geometry.index(base_row + dr, base_col + dc));
                }
            }
        }
    }
    cells.sort_unstable();
    Ok(cells)
}

fn place_blobs(
    geometry: &GridGeometry,
    count: usize,
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec2>> {
    let (lo, hi) = geometry.bounds();
    let tol = 1e-12 * geometry.cell_size();
    let eligible: Vec<Vec2> = geometry
        .centers()
        .filter(|p| {
            p.x - radius >= lo.x - tol
                && p.x + radius <= hi.x + tol
                && p.y - radius >= lo.y - tol
                && p.y + radius <= hi.y + tol
        })
        .collect();
    if eligible.is_empty() {
        return Err(GridError::InfeasibleGeometry(format!(
            "blob of radius {radius} m does not fit inside the workspace"
        )));
    }
    let mut centers: Vec<Vec2> = Vec::with_capacity(count);
    while centers.len() < count {
        // Prefer non-overlapping blobs but accept overlap once the retry budget is spent.
        let mut pick = eligible[rng.random_range(0..eligible.len())];
        for _ in 0..BLOB_PLACEMENT_TRIES {
            if centers.iter().all(|c| c.distance(pick) >= 2.0 * radius) {
                break;
            }
            pick = eligible[rng.random_range(0..eligible.len())];
        }
        centers.push(pick);
    }
    Ok(centers)
}

fn check_mass(total_mass: f64) -> Result<()> {
    if total_mass.is_finite() && total_mass > 0.0 {
        Ok(())
    } else {
        Err(GridError::InvalidGeometry(format!(
            "total mass must be positive, got {total_mass}"
        )))
    }
}

fn from_weights(geometry: &GridGeometry, weights: Vec<f64>, total_mass: f64) -> Result<HeightMap> {
    let sum: f64 = weights.iter().sum();
    if sum.is_nan() || sum <= 0.0 {
        return Err(GridError::ZeroMass);
    }
    let factor = total_mass / (sum * geometry.cell_area());
    Ok(HeightMap::from_raw(
        *geometry,
        weights.into_iter().map(|w| w * factor).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn uniform_source_is_flat() {
        let g = GridGeometry::default();
        let m = generate_source(SourceKind::Uniform, &g, 1.0, 0).unwrap();
        let h0 = m.height(0);
        assert!(m.heights().iter().all(|h| (h - h0).abs() <= 1e-15 * h0));
        assert!(rel(m.total_mass(), 1.0) <= 1e-9);
    }

    #[test]
    fn sources_are_seeded_and_conserve_mass() {
        let g = GridGeometry::default();
        for kind in SourceKind::ALL {
            for seed in 0..5 {
                let a = generate_source(kind, &g, 0.37, seed).unwrap();
                let b = generate_source(kind, &g, 0.37, seed).unwrap();
                assert_eq!(a, b, "{kind}");
                assert!(rel(a.total_mass(), 0.37) <= 1e-9, "{kind}");
            }
        }
        let a = generate_source(SourceKind::OneBlob, &g, 1.0, 7).unwrap();
        let b = generate_source(SourceKind::OneBlob, &g, 1.0, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn blob_stays_inside_workspace() {
        let g = GridGeometry::default();
        let (lo, hi) = g.bounds();
        for seed in 0..20 {
            let m = generate_source(SourceKind::OneBlob, &g, 1.0, seed).unwrap();
            let occupied: Vec<_> = (0..g.len()).filter(|&i| m.height(i) > 0.0).collect();
            assert!(!occupied.is_empty());
            for i in occupied {
                let p = g.cell_center(i);
                assert!(p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y);
            }
        }
    }

    #[test]
    fn gaussian_peaks_at_center() {
        let g = GridGeometry::default();
        let m = generate_source(SourceKind::Gaussian, &g, 1.0, 3).unwrap();
        let sum: f64 = m.heights().iter().map(|h| h * g.cell_area()).sum();
        assert!((sum - 1.0).abs() <= 1e-9);
        let argmax = (0..g.len())
            .max_by(|&a, &b| m.height(a).total_cmp(&m.height(b)))
            .unwrap();
        assert_eq!(argmax, g.index(12, 12));
    }

    #[test]
    fn oversized_blob_is_infeasible() {
        let g = GridGeometry::square(5, 0.02).unwrap();
        let err = generate_source(SourceKind::OneBlob, &g, 1.0, 0).unwrap_err();
        assert!(matches!(err, GridError::InfeasibleGeometry(_)));
    }

    #[test]
    fn gather_disc_matches_cell_count() {
        let g = GridGeometry::default();
        let center = g.workspace_center();
        let m = generate_target(
            &TargetKind::Gather {
                center,
                radius: 0.08,
            },
            &g,
            1.0,
        )
        .unwrap();
        // Independent count: integer offsets (dx, dy) with 0.02^2 (dx^2 + dy^2) <= 0.08^2.
        let mut expected = 0;
        for dy in -4i32..=4 {
            for dx in -4i32..=4 {
                if dx * dx + dy * dy <= 16 {
                    expected += 1;
                }
            }
        }
        let occupied: Vec<f64> = m.heights().iter().copied().filter(|h| *h > 0.0).collect();
        assert_eq!(occupied.len(), expected);
        let per_cell = 1.0 / (expected as f64 * g.cell_area());
        assert!(occupied.iter().all(|h| rel(*h, per_cell) <= 1e-12));
    }

    #[test]
    fn separation_clusters_split_mass_evenly() {
        let g = GridGeometry::default();
        let c = g.workspace_center();
        let centers = vec![c + Vec2::new(-0.12, 0.0), c + Vec2::new(0.12, 0.0)];
        let m = generate_target(
            &TargetKind::SepN {
                centers: centers.clone(),
                radius: 0.06,
            },
            &g,
            2.0,
        )
        .unwrap();
        for center in centers {
            let mass: f64 = disc_cells(&g, center, 0.06)
                .iter()
                .map(|&i| m.height(i) * g.cell_area())
                .sum();
            assert!((mass - 1.0).abs() <= 1e-9);
        }
        let overlapping = TargetKind::SepN {
            centers: vec![c, c + Vec2::new(0.05, 0.0)],
            radius: 0.06,
        };
        assert!(matches!(
            generate_target(&overlapping, &g, 1.0),
            Err(GridError::InfeasibleGeometry(_))
        ));
    }

    #[test]
    fn empty_gather_is_infeasible() {
        let g = GridGeometry::default();
        let t = TargetKind::Gather {
            center: Vec2::new(5.0, 5.0),
            radius: 0.01,
        };
        assert!(matches!(
            generate_target(&t, &g, 1.0),
            Err(GridError::InfeasibleGeometry(_))
        ));
    }

    #[test]
    fn letter_t_matches_hand_rasterization() {
        // 25x25 grid: scale 3, glyph block starts at column 5 and row 2.
        // Top bar: glyph row 0 -> grid rows 20..23, columns 5..20.
        // Stem: glyph rows 1..7, column 2 -> grid rows 2..20, columns 11..14.
        let g = GridGeometry::default();
        let mut expected = Vec::new();
        for r in 20..23 {
            for c in 5..20 {
                expected.push(g.index(r, c));
            }
        }
        for r in 2..20 {
            for c in 11..14 {
                expected.push(g.index(r, c));
            }
        }
        expected.sort_unstable();
        assert_eq!(letter_cells(&g, 'T').unwrap(), expected);
        let m = generate_target(&TargetKind::Letter { glyph: 'T' }, &g, 1.0).unwrap();
        let occupied: Vec<usize> = (0..g.len()).filter(|&i| m.height(i) > 0.0).collect();
        assert_eq!(occupied, expected);
        for ch in ['E', 'T', 'H', 'A', 'S', 'L'] {
            assert!(generate_target(&TargetKind::Letter { glyph: ch }, &g, 1.0).is_ok());
        }
    }

    #[test]
    fn source_kind_names_round_trip() {
        for k in SourceKind::ALL {
            assert_eq!(k.name().parse::<SourceKind>().unwrap(), k);
        }
        assert!("blob".parse::<SourceKind>().is_err());
    }
}
