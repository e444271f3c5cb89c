//! Mass-conserving height-map dynamics for a spatula sweep.
//!
//! A sweep picks up a fraction of the material in every cell it covers,
//! spills part of it back along the swept strip and drops the rest in a
//! short ramp that peaks at the spatula's end position. Slopes steeper than
//! the repose limit then slump onto lower neighbours, and optional
//! multiplicative noise perturbs the result. The workspace boundary is a
//! wall: material pushed against it piles up in the edge cells.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::grid::HeightMap;
use crate::planner::{SweepAction, SweepPatch};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Fraction of each swept cell's material carried by the spatula, in (0, 1].
    pub pickup_fraction: f64,
    /// Fraction of the carried material spilled evenly over the swept cells, in [0, 1).
    pub trail_fraction: f64,
    /// Cells on either side of the end edge that share the deposit.
    pub deposit_spread_cells: usize,
    /// Largest stable height difference per cell pitch.
    pub repose_ratio: f64,
    /// Relaxation passes after each sweep; 0 disables slumping.
    pub relax_iterations: usize,
    /// Std of the zero-mean multiplicative height noise; 0 disables it.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            pickup_fraction: 0.9,
            trail_fraction: 0.15,
            deposit_spread_cells: 2,
            repose_ratio: 0.8,
            relax_iterations: 10,
            noise_std: 0.02,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Full pickup, no spill, no spread, no slumping, no noise: a sweep then
    /// reproduces the planner's simple push model exactly.
    pub fn ideal_push() -> Self {
        Self {
            pickup_fraction: 1.0,
            trail_fraction: 0.0,
            deposit_spread_cells: 0,
            repose_ratio: 0.0,
            relax_iterations: 0,
            noise_std: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if !(self.pickup_fraction > 0.0 && self.pickup_fraction <= 1.0) {
            return bad("pickup_fraction must be in (0, 1]");
        }
        if !(self.trail_fraction >= 0.0 && self.trail_fraction < 1.0) {
            return bad("trail_fraction must be in [0, 1)");
        }
        if !(self.repose_ratio >= 0.0 && self.repose_ratio.is_finite()) {
            return bad("repose_ratio must be nonnegative");
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad("noise_std must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimStep {
    pub map: HeightMap,
    /// The clipped sweep covered no cell; `map` is the unchanged input.
    pub degenerate: bool,
}

pub fn apply_sweep(
    map: &HeightMap,
    action: &SweepAction,
    cfg: &SimConfig,
) -> Result<SimStep, SimError> {
    cfg.validate()?;
    let geometry = *map.geometry();
    let patch = action
        .clipped_to(&geometry)
        .map(|a| SweepPatch::new(a, &geometry))
        .filter(|p| !p.cells().is_empty());
    let Some(patch) = patch else {
        log_degenerate(action);
        return Ok(SimStep {
            map: map.clone(),
            degenerate: true,
        });
    };

    let mut heights = map.heights().to_vec();
    let mut carried = Vec::with_capacity(patch.cells().len());
    for &i in patch.cells() {
        let take = heights[i] * cfg.pickup_fraction;
        heights[i] -= take;
        carried.push(take);
    }
    let total: f64 = carried.iter().sum();
    if total > 0.0 {
        if cfg.trail_fraction > 0.0 {
            let spill = total * cfg.trail_fraction / patch.cells().len() as f64;
            for &i in patch.cells() {
                heights[i] += spill;
            }
        }
        let keep = 1.0 - cfg.trail_fraction;
        let spread = cfg.deposit_spread_cells as i64;
        let norm = ((spread + 1) * (spread + 1)) as f64;
        let step = patch.direction() * geometry.cell_size();
        for (&i, &c) in patch.cells().iter().zip(&carried) {
            if c == 0.0 {
                continue;
            }
            let (_, end) = patch.push_unchecked(i);
            let load = c * keep;
            for k in -spread..=spread {
                let w = (spread + 1 - k.abs()) as f64 / norm;
                let at = end + step * k as f64;
                heights[geometry.cell_containing(at)] += load * w;
            }
        }
    }

    let mut out = HeightMap::from_raw(geometry, heights);
    if cfg.relax_iterations > 0 {
        out = repose_relax(&out, cfg);
    }
    if cfg.noise_std > 0.0 {
        out = add_noise(&out, cfg);
    }
    Ok(SimStep {
        map: out,
        degenerate: false,
    })
}

fn log_degenerate(action: &SweepAction) {
    if std::env::var_os("OTSWEEP_DEBUG").is_some() {
        eprintln!("warning: sweep {action} covers no cell");
    }
}

/// Slope-limited slumping. Each pass moves, from every cell to each lower
/// 4-neighbour, half the height excess over `repose_ratio * cell_size`,
/// divided among the lower neighbours so no cell gives more than half its
/// height. Updates are computed from a snapshot of the pass.
pub fn repose_relax(map: &HeightMap, cfg: &SimConfig) -> HeightMap {
    let g = *map.geometry();
    let (w, h) = (g.width_cells(), g.height_cells());
    let limit = cfg.repose_ratio * g.cell_size();
    let mut cur = map.heights().to_vec();
    let mut next = cur.clone();
    let mut lower = [(0usize, 0.0f64); 4];
    for _ in 0..cfg.relax_iterations {
        next.copy_from_slice(&cur);
        let mut moved = false;
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                let hi = cur[i];
                if hi <= 0.0 {
                    continue;
                }
                let mut count = 0;
                let mut visit = |j: usize| {
                    let excess = hi - cur[j] - limit;
                    if excess > 0.0 {
                        lower[count] = (j, excess);
                        count += 1;
                    }
                };
                if c > 0 {
                    visit(i - 1);
                }
                if c + 1 < w {
                    visit(i + 1);
                }
                if r > 0 {
                    visit(i - w);
                }
                if r + 1 < h {
                    visit(i + w);
                }
                if count == 0 {
                    continue;
                }
                moved = true;
                let share = 0.5 / count as f64;
                for &(j, excess) in &lower[..count] {
                    let f = excess * share;
                    next[i] -= f;
                    next[j] += f;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        if !moved {
            break;
        }
    }
    for v in &mut cur {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    HeightMap::from_raw(g, cur)
}

fn add_noise(map: &HeightMap, cfg: &SimConfig) -> HeightMap {
    let before = map.height_sum();
    if before <= 0.0 {
        return map.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, cfg.noise_std).expect("noise_std validated");
    let noisy: Vec<f64> = map
        .heights()
        .iter()
        .map(|&h| h * (1.0 + normal.sample(&mut rng)).max(0.0))
        .collect();
    let after: f64 = noisy.iter().sum();
    if after <= 0.0 {
        return map.clone();
    }
    let factor = before / after;
    HeightMap::from_raw(
        *map.geometry(),
        noisy.into_iter().map(|h| h * factor).collect(),
    )
}
