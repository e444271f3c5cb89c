//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are dotted;
//! every key must belong to the schema below, unknown keys are rejected.
//!
//! | key | default |
//! |-----|---------|
//! | `grid.cells_x`, `grid.cells_y` | 25 |
//! | `grid.cell_size` | 0.02 |
//! | `grid.origin_x`, `grid.origin_y` | half a cell |
//! | `total_mass` | 0.0002 (m^3) |
//! | `planner.alpha_plus` | 1.0 |
//! | `planner.alpha_minus` | 100.0 |
//! | `planner.num_samples` | 10 |
//! | `planner.delta_refine` | 0.02 |
//! | `planner.delta_min` | 0.04 |
//! | `planner.spatula_width` | 0.07 |
//! | `planner.convergence_emd` | 0.0001 |
//! | `sim.pickup_fraction` | 0.9 |
//! | `sim.trail_fraction` | 0.15 |
//! | `sim.deposit_spread_cells` | 2 |
//! | `sim.repose_ratio` | 0.8 |
//! | `sim.relax_iterations` | 10 |
//! | `sim.noise_std` | 0.02 |
//! | `seed` | 0 |
//!
//! Single episodes (`task`, `source`, `method`, `iterations`,
//! `target.radius`, `target.center_x`, `target.center_y`, `target.n`,
//! `target.centers`, `target.letter`) and experiment grids (`methods`,
//! `sources`, `gather_targets`, `sep_targets`, `letters`, `letter_source`,
//! `letter_iterations`, `iterations.<source>`, `replicates`, `base_seed`,
//! `workers`, `gather.radius`, `sep.radius`) add their own keys; see
//! [`TaskSpec::from_config`](super::TaskSpec::from_config) and
//! [`ExperimentConfig::from_config`](super::ExperimentConfig::from_config).

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use super::HarnessError;
use crate::geom::Vec2;
use crate::grid::GridGeometry;
use crate::planner::PlannerConfig;
use crate::sim::SimConfig;

const KNOWN_KEYS: &[&str] = &[
    "grid.cells_x",
    "grid.cells_y",
    "grid.cell_size",
    "grid.origin_x",
    "grid.origin_y",
    "total_mass",
    "planner.alpha_plus",
    "planner.alpha_minus",
    "planner.num_samples",
    "planner.delta_refine",
    "planner.delta_min",
    "planner.spatula_width",
    "planner.convergence_emd",
    "sim.pickup_fraction",
    "sim.trail_fraction",
    "sim.deposit_spread_cells",
    "sim.repose_ratio",
    "sim.relax_iterations",
    "sim.noise_std",
    "seed",
    "task",
    "source",
    "method",
    "iterations",
    "target.radius",
    "target.center_x",
    "target.center_y",
    "target.n",
    "target.centers",
    "target.letter",
    "methods",
    "sources",
    "gather_targets",
    "sep_targets",
    "letters",
    "letter_source",
    "letter_iterations",
    "replicates",
    "base_seed",
    "workers",
    "gather.radius",
    "sep.radius",
];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed configuration file with typed, defaulted lookups.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    path: String,
    entries: BTreeMap<String, Entry>,
}

impl ConfigFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config {
            path: path.display().to_string(),
            field: String::new(),
            message: e.to_string(),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, path: &str) -> Result<Self, HarnessError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |field: &str, message: String| HarnessError::Config {
                path: path.to_string(),
                field: field.to_string(),
                message: format!("line {}: {message}", idx + 1),
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("", format!("expected 'key = value', got '{line}'")))?;
            let key = key.trim();
            let value = value.split_once('#').map_or(value, |(v, _)| v).trim();
            if !is_known(key) {
                return Err(err(key, "unknown key".into()));
            }
            if entries
                .insert(
                    key.to_string(),
                    Entry {
                        value: value.to_string(),
                        line: idx + 1,
                    },
                )
                .is_some()
            {
                return Err(err(key, "duplicate key".into()));
            }
        }
        Ok(Self {
            path: path.to_string(),
            entries,
        })
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn error(&self, key: &str, message: impl Into<String>) -> HarnessError {
        let message = message.into();
        let message = match self.entries.get(key) {
            Some(e) => format!("line {}: {message}", e.line),
            None => message,
        };
        HarnessError::Config {
            path: self.path.clone(),
            field: key.to_string(),
            message,
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, HarnessError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| self.error(key, format!("cannot parse '{v}'"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, HarnessError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list; an empty value yields an empty list.
    pub fn list(&self, key: &str) -> Option<Vec<String>> {
        self.raw(key).map(|v| {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        })
    }

    /// `iterations.<source>` style keys present in the file.
    pub fn keys_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries
            .keys()
            .filter(move |k| k.starts_with(prefix))
            .map(String::as_str)
    }

    pub fn geometry(&self) -> Result<GridGeometry, HarnessError> {
        let d = GridGeometry::default();
        let cells_x = self.get_or("grid.cells_x", d.width_cells())?;
        let cells_y = self.get_or("grid.cells_y", d.height_cells())?;
        let cell_size: f64 = self.get_or("grid.cell_size", d.cell_size())?;
        let ox = self.get_or("grid.origin_x", cell_size / 2.0)?;
        let oy = self.get_or("grid.origin_y", cell_size / 2.0)?;
        GridGeometry::new(cells_x, cells_y, cell_size, Vec2::new(ox, oy))
            .map_err(|e| self.error("grid", e.to_string()))
    }

    pub fn planner(&self) -> Result<PlannerConfig, HarnessError> {
        let d = PlannerConfig::default();
        let cfg = PlannerConfig {
            alpha_plus: self.get_or("planner.alpha_plus", d.alpha_plus)?,
            alpha_minus: self.get_or("planner.alpha_minus", d.alpha_minus)?,
            num_samples: self.get_or("planner.num_samples", d.num_samples)?,
            delta_refine: self.get_or("planner.delta_refine", d.delta_refine)?,
            delta_min: self.get_or("planner.delta_min", d.delta_min)?,
            spatula_width: self.get_or("planner.spatula_width", d.spatula_width)?,
            convergence_emd: self.get_or("planner.convergence_emd", d.convergence_emd)?,
            seed: self.get_or("seed", d.seed)?,
        };
        cfg.validate()
            .map_err(|e| self.error("planner", e.to_string()))?;
        Ok(cfg)
    }

    pub fn sim(&self) -> Result<SimConfig, HarnessError> {
        let d = SimConfig::default();
        let cfg = SimConfig {
            pickup_fraction: self.get_or("sim.pickup_fraction", d.pickup_fraction)?,
            trail_fraction: self.get_or("sim.trail_fraction", d.trail_fraction)?,
            deposit_spread_cells: self
                .get_or("sim.deposit_spread_cells", d.deposit_spread_cells)?,
            repose_ratio: self.get_or("sim.repose_ratio", d.repose_ratio)?,
            relax_iterations: self.get_or("sim.relax_iterations", d.relax_iterations)?,
            noise_std: self.get_or("sim.noise_std", d.noise_std)?,
            seed: self.get_or("seed", d.seed)?,
        };
        cfg.validate()
            .map_err(|e| self.error("sim", e.to_string()))?;
        Ok(cfg)
    }

    pub fn total_mass(&self) -> Result<f64, HarnessError> {
        let m: f64 = self.get_or("total_mass", super::DEFAULT_TOTAL_MASS)?;
        if !(m > 0.0 && m.is_finite()) {
            return Err(self.error("total_mass", "must be positive"));
        }
        Ok(m)
    }
}

fn is_known(key: &str) -> bool {
    KNOWN_KEYS.contains(&key)
        || key
            .strip_prefix("iterations.")
            .is_some_and(|s| s.parse::<crate::grid::SourceKind>().is_ok())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_with_defaults() {
        let cfg = ConfigFile::parse(
            "# comment\ngrid.cells_x = 10\nplanner.alpha_minus = 5 # inline\nsim.noise_std=0\n",
            "t.cfg",
        )
        .unwrap();
        let g = cfg.geometry().unwrap();
        assert_eq!((g.width_cells(), g.height_cells()), (10, 25));
        assert_eq!(cfg.planner().unwrap().alpha_minus, 5.0);
        assert_eq!(cfg.planner().unwrap().num_samples, 10);
        assert_eq!(cfg.sim().unwrap().noise_std, 0.0);
    }

    #[test]
    fn errors_name_path_and_field() {
        let err = ConfigFile::parse("planner.alpha = 1\n", "bad.cfg").unwrap_err();
        match err {
            HarnessError::Config { path, field, .. } => {
                assert_eq!(path, "bad.cfg");
                assert_eq!(field, "planner.alpha");
            }
            other => panic!("{other:?}"),
        }
        let cfg = ConfigFile::parse("planner.num_samples = ten\n", "x.cfg").unwrap();
        assert!(
            matches!(cfg.planner(), Err(HarnessError::Config { field, .. }) if field == "planner.num_samples")
        );
        assert!(ConfigFile::parse("seed 3\n", "x").is_err());
        assert!(ConfigFile::parse("seed = 3\nseed = 4\n", "x").is_err());
        let cfg = ConfigFile::parse("planner.num_samples = 0\n", "x").unwrap();
        assert!(cfg.planner().is_err());
    }

    #[test]
    fn iteration_keys_must_name_a_source() {
        assert!(ConfigFile::parse("iterations.uniform = 5\n", "x").is_ok());
        assert!(ConfigFile::parse("iterations.sand = 5\n", "x").is_err());
    }
}
