use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    ConfigFile, HarnessError, Result, DEFAULT_GATHER_RADIUS, DEFAULT_SEP_RADIUS,
    DEFAULT_TOTAL_MASS, PLACEMENT_ATTEMPTS,
};
use crate::geom::Vec2;
use crate::grid::{
    generate_source, generate_target, glyph, GridError, GridGeometry, HeightMap, SourceKind,
    TargetKind,
};
use crate::planner::PlannerConfig;
use crate::sim::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Ours,
    MaxOt,
    DiffMap,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ours, Method::MaxOt, Method::DiffMap];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ours => "ours",
            Method::MaxOt => "max_ot",
            Method::DiffMap => "diff_map",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "ours" => Ok(Method::Ours),
            "max_ot" | "maxot" => Ok(Method::MaxOt),
            "diff_map" | "diffmap" => Ok(Method::DiffMap),
            other => Err(format!(
                "unknown method '{other}' (expected ours, max_ot or diff_map)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskFamily {
    Gather,
    SepN,
    Letter,
}

impl TaskFamily {
    pub fn name(self) -> &'static str {
        match self {
            TaskFamily::Gather => "gather",
            TaskFamily::SepN => "sep_n",
            TaskFamily::Letter => "letter",
        }
    }
}

impl FromStr for TaskFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "gather" => Ok(TaskFamily::Gather),
            "sep_n" | "sep" => Ok(TaskFamily::SepN),
            "letter" => Ok(TaskFamily::Letter),
            other => Err(format!(
                "unknown task '{other}' (expected gather, sep_n or letter)"
            )),
        }
    }
}

/// Target description; missing centers are drawn from the instance seed.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    Gather {
        center: Option<Vec2>,
        radius: f64,
    },
    SepN {
        n: usize,
        centers: Option<Vec<Vec2>>,
        radius: f64,
    },
    Letter {
        glyph: char,
    },
}

impl TargetSpec {
    pub fn family(&self) -> TaskFamily {
        match self {
            TargetSpec::Gather { .. } => TaskFamily::Gather,
            TargetSpec::SepN { .. } => TaskFamily::SepN,
            TargetSpec::Letter { .. } => TaskFamily::Letter,
        }
    }

    /// Fixes every disc center. Random centers keep each disc at least one
    /// spatula width away from the workspace boundary, and separation discs
    /// at least one cell apart.
    pub fn resolve(
        &self,
        geometry: &GridGeometry,
        spatula_width: f64,
        seed: u64,
    ) -> Result<TargetKind> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            TargetSpec::Gather { center, radius } => {
                let center = match center {
                    Some(c) => *c,
                    None => place_discs(geometry, 1, *radius, spatula_width, &mut rng)?[0],
                };
                Ok(TargetKind::Gather {
                    center,
                    radius: *radius,
                })
            }
            TargetSpec::SepN { n, centers, radius } => {
                let centers = match centers {
                    Some(c) if c.len() == *n => c.clone(),
                    Some(c) => {
                        return Err(GridError::InvalidGeometry(format!(
                            "{} separation centers given for {n} clusters",
                            c.len()
                        ))
                        .into())
                    }
                    None => place_discs(geometry, *n, *radius, spatula_width, &mut rng)?,
                };
                Ok(TargetKind::SepN {
                    centers,
                    radius: *radius,
                })
            }
            TargetSpec::Letter { glyph } => Ok(TargetKind::Letter { glyph: *glyph }),
        }
    }
}

fn place_discs(
    geometry: &GridGeometry,
    count: usize,
    radius: f64,
    margin: f64,
    rng: &mut impl Rng,
) -> Result<Vec<Vec2>> {
    let (lo, hi) = geometry.bounds();
    let inset = radius + margin;
    let (x0, x1) = (lo.x + inset, hi.x - inset);
    let (y0, y1) = (lo.y + inset, hi.y - inset);
    if x0 > x1 || y0 > y1 {
        return Err(GridError::InfeasibleGeometry(format!(
            "no room for a disc of radius {radius} with margin {margin}"
        ))
        .into());
    }
    let gap = 2.0 * radius + geometry.cell_size();
    for _ in 0..PLACEMENT_ATTEMPTS {
        let centers: Vec<Vec2> = (0..count)
            .map(|_| Vec2::new(rng.random_range(x0..=x1), rng.random_range(y0..=y1)))
            .collect();
        let apart = centers
            .iter()
            .enumerate()
            .all(|(k, a)| centers[k + 1..].iter().all(|b| a.distance(*b) >= gap));
        if apart {
            return Ok(centers);
        }
    }
    Err(GridError::InfeasibleGeometry(format!(
        "could not place {count} discs of radius {radius} in {PLACEMENT_ATTEMPTS} attempts"
    ))
    .into())
}

/// Iteration budget per initial distribution: the scattered starts get more sweeps.
pub fn default_budget(source: SourceKind) -> usize {
    match source {
        SourceKind::FourBlobs | SourceKind::Uniform => 50,
        SourceKind::OneBlob | SourceKind::TwoBlobs | SourceKind::Gaussian => 30,
    }
}

/// One closed-loop episode.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    /// Label used in CSV output and error messages.
    pub id: String,
    pub source: SourceKind,
    pub target: TargetSpec,
    pub iterations: usize,
    pub method: Method,
    pub geometry: GridGeometry,
    pub total_mass: f64,
    pub planner: PlannerConfig,
    pub sim: SimConfig,
    /// Seeds the source shape and any random target placement.
    pub instance_seed: u64,
    /// Seeds the planner and simulator.
    pub seed: u64,
}

impl TaskSpec {
    /// Default gather task with simulator and planner defaults.
    pub fn gather(source: SourceKind, method: Method, seed: u64) -> Self {
        Self {
            id: format!("{method}/{source}/gather"),
            source,
            target: TargetSpec::Gather {
                center: None,
                radius: DEFAULT_GATHER_RADIUS,
            },
            iterations: default_budget(source),
            method,
            geometry: GridGeometry::default(),
            total_mass: DEFAULT_TOTAL_MASS,
            planner: PlannerConfig::default(),
            sim: SimConfig::default(),
            instance_seed: seed,
            seed,
        }
    }

    /// Reads a task from a configuration file; `seed` sets both seeds.
    pub fn from_config(cfg: &ConfigFile) -> Result<Self> {
        let family: TaskFamily = parse_enum(cfg, "task", "gather")?;
        let source: SourceKind = parse_enum(cfg, "source", "one_blob")?;
        let method: Method = parse_enum(cfg, "method", "ours")?;
        let iterations = cfg.get_or("iterations", default_budget(source))?;
        if iterations == 0 {
            return Err(cfg.error("iterations", "must be at least 1"));
        }
        let target = match family {
            TaskFamily::Gather => {
                let radius = positive(cfg, "target.radius", DEFAULT_GATHER_RADIUS)?;
                let center = match (
                    cfg.get::<f64>("target.center_x")?,
                    cfg.get::<f64>("target.center_y")?,
                ) {
                    (Some(x), Some(y)) => Some(Vec2::new(x, y)),
                    (None, None) => None,
                    _ => {
                        return Err(cfg.error(
                            "target.center_x",
                            "give both target.center_x and target.center_y",
                        ))
                    }
                };
                TargetSpec::Gather { center, radius }
            }
            TaskFamily::SepN => {
                let radius = positive(cfg, "target.radius", DEFAULT_SEP_RADIUS)?;
                let centers = cfg
                    .raw("target.centers")
                    .map(|v| parse_centers(cfg, v))
                    .transpose()?;
                let n = cfg.get_or("target.n", centers.as_ref().map_or(2, Vec::len))?;
                if n < 2 {
                    return Err(cfg.error("target.n", "separation needs at least 2 clusters"));
                }
                if centers.as_ref().is_some_and(|c| c.len() != n) {
                    return Err(cfg.error("target.centers", format!("expected {n} centers")));
                }
                TargetSpec::SepN { n, centers, radius }
            }
            TaskFamily::Letter => {
                let letter = cfg.raw("target.letter").unwrap_or("T");
                let mut chars = letter.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) if glyph(c).is_some() => TargetSpec::Letter {
                        glyph: c.to_ascii_uppercase(),
                    },
                    _ => {
                        return Err(cfg.error(
                            "target.letter",
                            format!("'{letter}' is not a single letter A-Z"),
                        ))
                    }
                }
            }
        };
        let seed = cfg.get_or("seed", 0u64)?;
        let planner = cfg.planner()?;
        let sim = cfg.sim()?;
        Ok(Self {
            id: format!("{method}/{source}/{}", family.name()),
            source,
            target,
            iterations,
            method,
            geometry: cfg.geometry()?,
            total_mass: cfg.total_mass()?,
            planner,
            sim,
            instance_seed: seed,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(HarnessError::Config {
                path: self.id.clone(),
                field: "iterations".into(),
                message: "must be at least 1".into(),
            });
        }
        self.planner.validate()?;
        self.sim.validate()?;
        Ok(())
    }

    /// Source and target height maps of this task instance.
    pub fn build_maps(&self) -> Result<(HeightMap, HeightMap)> {
        let source = generate_source(
            self.source,
            &self.geometry,
            self.total_mass,
            self.instance_seed,
        )?;
        let kind = self.target.resolve(
            &self.geometry,
            self.planner.spatula_width,
            super::mix_seed(self.instance_seed, 0x7a46),
        )?;
        let target = generate_target(&kind, &self.geometry, self.total_mass)?;
        Ok((source, target))
    }
}

fn parse_enum<T: FromStr<Err = String>>(cfg: &ConfigFile, key: &str, default: &str) -> Result<T> {
    cfg.raw(key)
        .unwrap_or(default)
        .parse()
        .map_err(|e: String| cfg.error(key, e))
}

fn positive(cfg: &ConfigFile, key: &str, default: f64) -> Result<f64> {
    let v: f64 = cfg.get_or(key, default)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(cfg.error(key, "must be positive"))
    }
}

/// `x,y;x,y;...`
fn parse_centers(cfg: &ConfigFile, value: &str) -> Result<Vec<Vec2>> {
    value
        .split(';')
        .map(|pair| {
            let mut it = pair.split(',').map(|s| s.trim().parse::<f64>());
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => Ok(Vec2::new(x, y)),
                _ => Err(cfg.error(
                    "target.centers",
                    format!("cannot parse center '{}'", pair.trim()),
                )),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("greedy".parse::<Method>().is_err());
    }

    #[test]
    fn random_targets_respect_margins() {
        let g = GridGeometry::default();
        let (lo, hi) = g.bounds();
        for seed in 0..50 {
            let spec = TargetSpec::SepN {
                n: 4,
                centers: None,
                radius: DEFAULT_SEP_RADIUS,
            };
            let TargetKind::SepN { centers, radius } = spec.resolve(&g, 0.07, seed).unwrap() else {
                unreachable!()
            };
            for (k, c) in centers.iter().enumerate() {
                let inset = radius + 0.07 - 1e-12;
                assert!(c.x >= lo.x + inset && c.x <= hi.x - inset);
                assert!(c.y >= lo.y + inset && c.y <= hi.y - inset);
                for d in &centers[k + 1..] {
                    assert!(c.distance(*d) >= 2.0 * radius);
                }
            }
        }
    }

    #[test]
    fn task_config_parsing() {
        let cfg = ConfigFile::parse(
            "task = sep_n\nsource = uniform\nmethod = max_ot\ntarget.centers = 0.15,0.25; 0.35,0.25\nseed = 9\n",
            "t.cfg",
        )
        .unwrap();
        let spec = TaskSpec::from_config(&cfg).unwrap();
        assert_eq!(spec.iterations, 50);
        assert_eq!(spec.method, Method::MaxOt);
        assert_eq!(
            spec.target,
            TargetSpec::SepN {
                n: 2,
                centers: Some(vec![Vec2::new(0.15, 0.25), Vec2::new(0.35, 0.25)]),
                radius: DEFAULT_SEP_RADIUS
            }
        );
        let bad = ConfigFile::parse("task = letter\ntarget.letter = 7\n", "t.cfg").unwrap();
        assert!(
            matches!(TaskSpec::from_config(&bad), Err(HarnessError::Config { field, .. }) if field == "target.letter")
        );
        let bad = ConfigFile::parse("iterations = 0\n", "t.cfg").unwrap();
        assert!(TaskSpec::from_config(&bad).is_err());
    }
}
