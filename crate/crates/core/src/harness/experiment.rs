use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::task::default_budget;
use super::{
    run_episode, stable_seed, ConfigFile, EpisodeRecord, HarnessError, Method, Result, TargetSpec,
    TaskSpec, DEFAULT_GATHER_RADIUS, DEFAULT_SEP_RADIUS, DEFAULT_TOTAL_MASS,
};
use crate::grid::{glyph, GridGeometry, SourceKind, TargetKind};
use crate::metrics::{
    quantile, quantile_csv_rows, quantiles, Metric, MetricSeries, EMD_DISPLAY_SCALE,
    METRIC_CSV_HEADER, QUANTILE_CSV_HEADER,
};
use crate::planner::PlannerConfig;
use crate::sim::SimConfig;

/// `count` separation targets with `n` clusters each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SepGroup {
    pub n: usize,
    pub count: usize,
}

/// Method x source x target grid. The default is the full evaluation grid:
/// five sources with ten gather and nine separation targets each (three for
/// each of 2, 3 and 4 clusters), plus the letters E, T, H, A, S, L from one
/// blob with 50 sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub sources: Vec<SourceKind>,
    pub gather_targets: usize,
    pub sep_targets: Vec<SepGroup>,
    pub letters: Vec<char>,
    pub letter_source: SourceKind,
    pub letter_iterations: usize,
    /// Overrides of the per-source iteration budget.
    pub budgets: Vec<(SourceKind, usize)>,
    /// Independent seeds per task instance.
    pub replicates: usize,
    pub base_seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub gather_radius: f64,
    pub sep_radius: f64,
    pub geometry: GridGeometry,
    pub total_mass: f64,
    pub planner: PlannerConfig,
    pub sim: SimConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            sources: SourceKind::ALL.to_vec(),
            gather_targets: 10,
            sep_targets: vec![
                SepGroup { n: 2, count: 3 },
                SepGroup { n: 3, count: 3 },
                SepGroup { n: 4, count: 3 },
            ],
            letters: vec!['E', 'T', 'H', 'A', 'S', 'L'],
            letter_source: SourceKind::OneBlob,
            letter_iterations: 50,
            budgets: Vec::new(),
            replicates: 1,
            base_seed: 0,
            workers: 0,
            gather_radius: DEFAULT_GATHER_RADIUS,
            sep_radius: DEFAULT_SEP_RADIUS,
            geometry: GridGeometry::default(),
            total_mass: DEFAULT_TOTAL_MASS,
            planner: PlannerConfig::default(),
            sim: SimConfig::default(),
        }
    }
}

/// One scheduled episode and the aggregation group it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeJob {
    pub spec: TaskSpec,
    pub target_id: String,
    /// `method/source/task`, where task is `gather`, `sep_n` or `letter`.
    pub group: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub jobs: Vec<EpisodeJob>,
    /// Same order as `jobs`.
    pub records: Vec<EpisodeRecord>,
}

impl ExperimentConfig {
    pub fn from_config(cfg: &ConfigFile) -> Result<Self> {
        let d = Self::default();
        let methods = match cfg.list("methods") {
            Some(v) => parse_all(cfg, "methods", &v)?,
            None => d.methods,
        };
        let sources = match cfg.list("sources") {
            Some(v) => parse_all(cfg, "sources", &v)?,
            None => d.sources,
        };
        let sep_targets = match cfg.list("sep_targets") {
            Some(v) => v
                .iter()
                .map(|g| {
                    let parsed = g.split_once(':').and_then(|(n, c)| {
                        Some(SepGroup {
                            n: n.trim().parse().ok()?,
                            count: c.trim().parse().ok()?,
                        })
                    });
                    match parsed {
                        Some(s) if s.n >= 2 => Ok(s),
                        _ => Err(cfg.error(
                            "sep_targets",
                            format!("expected clusters:count with clusters >= 2, got '{g}'"),
                        )),
                    }
                })
                .collect::<Result<Vec<_>>>()?,
            None => d.sep_targets,
        };
        let letters = match cfg.list("letters") {
            Some(v) => v
                .iter()
                .map(|l| {
                    let mut chars = l.chars();
                    match (chars.next(), chars.next()) {
                        (Some(c), None) if glyph(c).is_some() => Ok(c.to_ascii_uppercase()),
                        _ => Err(cfg.error("letters", format!("'{l}' is not a single letter A-Z"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?,
            None => d.letters,
        };
        let letter_source = match cfg.raw("letter_source") {
            Some(v) => v
                .parse()
                .map_err(|e: String| cfg.error("letter_source", e))?,
            None => d.letter_source,
        };
        let mut budgets = Vec::new();
        for key in cfg.keys_with_prefix("iterations.") {
            let source: SourceKind = key["iterations.".len()..]
                .parse()
                .map_err(|e: String| cfg.error(key, e))?;
            budgets.push((source, at_least_one(cfg, key, 1)?));
        }
        let out = Self {
            methods,
            sources,
            gather_targets: cfg.get_or("gather_targets", d.gather_targets)?,
            sep_targets,
            letters,
            letter_source,
            letter_iterations: at_least_one(cfg, "letter_iterations", d.letter_iterations)?,
            budgets,
            replicates: at_least_one(cfg, "replicates", d.replicates)?,
            base_seed: cfg.get_or("base_seed", d.base_seed)?,
            workers: cfg.get_or("workers", d.workers)?,
            gather_radius: cfg.get_or("gather.radius", d.gather_radius)?,
            sep_radius: cfg.get_or("sep.radius", d.sep_radius)?,
            geometry: cfg.geometry()?,
            total_mass: cfg.total_mass()?,
            planner: cfg.planner()?,
            sim: cfg.sim()?,
        };
        if out.methods.is_empty() {
            return Err(cfg.error("methods", "at least one method is required"));
        }
        for (key, r) in [
            ("gather.radius", out.gather_radius),
            ("sep.radius", out.sep_radius),
        ] {
            if !(r > 0.0 && r.is_finite()) {
                return Err(cfg.error(key, "must be positive"));
            }
        }
        Ok(out)
    }

    pub fn budget(&self, source: SourceKind) -> usize {
        self.budgets
            .iter()
            .rev()
            .find(|(s, _)| *s == source)
            .map_or_else(|| default_budget(source), |(_, b)| *b)
    }

    /// Episodes in output order: methods, then sources, then targets, then replicates.
    pub fn jobs(&self) -> Result<Vec<EpisodeJob>> {
        let mut targets: Vec<(String, TargetSpec)> = Vec::new();
        for k in 0..self.gather_targets {
            targets.push((
                format!("gather-{k:02}"),
                TargetSpec::Gather {
                    center: None,
                    radius: self.gather_radius,
                },
            ));
        }
        for g in &self.sep_targets {
            for k in 0..g.count {
                targets.push((
                    format!("sep{}-{k:02}", g.n),
                    TargetSpec::SepN {
                        n: g.n,
                        centers: None,
                        radius: self.sep_radius,
                    },
                ));
            }
        }
        // Target placement depends only on the target id, so every method and
        // source faces the same target set.
        let resolved = targets
            .into_iter()
            .map(|(id, spec)| {
                let placed = spec.resolve(
                    &self.geometry,
                    self.planner.spatula_width,
                    stable_seed(self.base_seed, &["target", &id]),
                )?;
                let fixed = match (spec, placed) {
                    (TargetSpec::Gather { radius, .. }, TargetKind::Gather { center, .. }) => {
                        TargetSpec::Gather {
                            center: Some(center),
                            radius,
                        }
                    }
                    (TargetSpec::SepN { n, radius, .. }, TargetKind::SepN { centers, .. }) => {
                        TargetSpec::SepN {
                            n,
                            centers: Some(centers),
                            radius,
                        }
                    }
                    (other, _) => other,
                };
                Ok((id, fixed))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut jobs = Vec::new();
        for &method in &self.methods {
            for &source in &self.sources {
                for (id, target) in &resolved {
                    self.push_jobs(
                        &mut jobs,
                        method,
                        source,
                        id,
                        target.clone(),
                        self.budget(source),
                    );
                }
            }
            for &letter in &self.letters {
                let id = format!("letter-{letter}");
                let target = TargetSpec::Letter { glyph: letter };
                self.push_jobs(
                    &mut jobs,
                    method,
                    self.letter_source,
                    &id,
                    target,
                    self.letter_iterations,
                );
            }
        }
        Ok(jobs)
    }

    fn push_jobs(
        &self,
        jobs: &mut Vec<EpisodeJob>,
        method: Method,
        source: SourceKind,
        target_id: &str,
        target: TargetSpec,
        iterations: usize,
    ) {
        for rep in 0..self.replicates {
            let target_id = if self.replicates == 1 {
                target_id.to_string()
            } else {
                format!("{target_id}-r{rep}")
            };
            let family = target.family();
            let spec = TaskSpec {
                id: format!("{method}/{source}/{target_id}"),
                source,
                target: target.clone(),
                iterations,
                method,
                geometry: self.geometry,
                total_mass: self.total_mass,
                planner: self.planner.clone(),
                sim: self.sim.clone(),
                instance_seed: stable_seed(self.base_seed, &["source", source.name(), &target_id]),
                seed: stable_seed(self.base_seed, &[method.name(), source.name(), &target_id]),
            };
            jobs.push(EpisodeJob {
                spec,
                target_id,
                group: format!("{method}/{source}/{}", family.name()),
            });
        }
    }
}

/// Runs every episode of the grid on up to `cfg.workers` threads. With
/// `out_dir`, writes `metrics_<method>.csv`, `quantiles.csv`,
/// `episodes.csv` and `summary.csv` there.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentOutput> {
    let jobs = cfg.jobs()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::Config {
            path: String::new(),
            field: "workers".into(),
            message: e.to_string(),
        })?;
    let records = pool.install(|| {
        jobs.par_iter()
            .map(|j| run_episode(&j.spec))
            .collect::<Result<Vec<_>>>()
    })?;
    let output = ExperimentOutput { jobs, records };
    if let Some(dir) = out_dir {
        output.write(dir, &cfg.methods)?;
    }
    Ok(output)
}

impl ExperimentOutput {
    /// Per-method metric CSV: every episode's rows, header included.
    pub fn metrics_csv(&self, method: Method) -> String {
        let mut out = format!("{METRIC_CSV_HEADER}\n");
        for r in self.records.iter().filter(|r| r.spec.method == method) {
            r.metrics.csv_rows(&mut out);
        }
        out
    }

    /// Groups in first-appearance order with their records.
    pub fn groups(&self) -> Vec<(&str, Vec<&EpisodeRecord>)> {
        let mut groups: Vec<(&str, Vec<&EpisodeRecord>)> = Vec::new();
        for (job, rec) in self.jobs.iter().zip(&self.records) {
            match groups.iter_mut().find(|(g, _)| *g == job.group) {
                Some((_, v)) => v.push(rec),
                None => groups.push((&job.group, vec![rec])),
            }
        }
        groups
    }

    /// Per-iteration quantiles for each group, with early-stopped episodes
    /// padded by their final row.
    pub fn quantiles_csv(&self) -> Result<String> {
        let mut out = format!("{QUANTILE_CSV_HEADER}\n");
        for (group, recs) in self.groups() {
            let series = padded(&recs);
            for metric in [Metric::Emd, Metric::Iou] {
                let rows = quantiles(&series, metric)?;
                quantile_csv_rows(&rows, &format!("{group}/{}", metric.name()), &mut out);
            }
        }
        Ok(out)
    }

    pub fn episodes_csv(&self) -> String {
        let mut out =
            String::from("episode,method,source,target,seed,actions,stop,initial_emd_m,final_emd_m,initial_iou,final_iou\n");
        for (job, r) in self.jobs.iter().zip(&self.records) {
            let (first, last) = (r.metrics.first(), r.metrics.last());
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.spec.id,
                r.spec.method,
                r.spec.source,
                job.target_id,
                r.spec.seed,
                r.steps.len(),
                r.stop.name(),
                first.map_or(f64::NAN, |m| m.emd),
                last.map_or(f64::NAN, |m| m.emd),
                first.map_or(f64::NAN, |m| m.iou),
                last.map_or(f64::NAN, |m| m.iou),
            );
        }
        out
    }

    /// Final-iteration quantiles per group; EMD columns are scaled by 10^3.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "group,episodes,emd_x1e3_initial_q50,emd_x1e3_final_q05,emd_x1e3_final_q50,emd_x1e3_final_q95,iou_final_q50\n",
        );
        for (group, recs) in self.groups() {
            let sorted = |f: &dyn Fn(&EpisodeRecord) -> f64| {
                let mut v: Vec<f64> = recs.iter().map(|r| f(r)).collect();
                v.sort_by(f64::total_cmp);
                v
            };
            let init =
                sorted(&|r| r.metrics.first().map_or(f64::NAN, |m| m.emd) * EMD_DISPLAY_SCALE);
            let fin = sorted(&|r| r.metrics.last().map_or(f64::NAN, |m| m.emd) * EMD_DISPLAY_SCALE);
            let iou = sorted(&|r| r.metrics.last().map_or(f64::NAN, |m| m.iou));
            let _ = writeln!(
                out,
                "{group},{},{:.4},{:.4},{:.4},{:.4},{:.4}",
                recs.len(),
                quantile(&init, 0.5),
                quantile(&fin, 0.05),
                quantile(&fin, 0.5),
                quantile(&fin, 0.95),
                quantile(&iou, 0.5),
            );
        }
        out
    }

    pub fn write(&self, dir: &Path, methods: &[Method]) -> Result<()> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| HarnessError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let mut files = Vec::new();
        for &m in methods {
            files.push((format!("metrics_{m}.csv"), self.metrics_csv(m)));
        }
        files.push(("quantiles.csv".into(), self.quantiles_csv()?));
        files.push(("episodes.csv".into(), self.episodes_csv()));
        files.push(("summary.csv".into(), self.summary_csv()));
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(io(&path))?;
        }
        Ok(())
    }
}

fn padded(recs: &[&EpisodeRecord]) -> Vec<MetricSeries> {
    let len = recs
        .iter()
        .map(|r| r.spec.iterations + 1)
        .max()
        .unwrap_or(0);
    recs.iter().map(|r| r.metrics.padded_to(len)).collect()
}

fn parse_all<T: std::str::FromStr<Err = String>>(
    cfg: &ConfigFile,
    key: &str,
    items: &[String],
) -> Result<Vec<T>> {
    items
        .iter()
        .map(|s| s.parse().map_err(|e: String| cfg.error(key, e)))
        .collect()
}

fn at_least_one(cfg: &ConfigFile, key: &str, default: usize) -> Result<usize> {
    let v = cfg.get_or(key, default)?;
    if v == 0 {
        return Err(cfg.error(key, "must be at least 1"));
    }
    Ok(v)
}
