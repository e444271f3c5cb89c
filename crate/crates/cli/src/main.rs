//! `otsweep` command-line front end.
//!
//! Exit codes: 0 on success, 2 for configuration or usage errors, 3 for
//! failures while reading inputs or running.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use otsweep::grid::{load_grid, save_grid, write_grid};
use otsweep::harness::{
    plan_action, run_episode, run_experiment, ConfigFile, ExperimentConfig, Method, TaskSpec,
};
use otsweep::metrics::METRIC_CSV_HEADER;
use otsweep::planner::transport_plan;
use otsweep::{
    apply_sweep, emd, ground_cost, HarnessError, PlannerConfig, SimConfig, SweepAction, Vec2,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "otsweep",
    version,
    about = "Optimal-transport sweep planning on height maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the earth mover's distance between two grid files, in meters.
    Emd {
        a: PathBuf,
        b: PathBuf,
        /// Exponent of the Euclidean ground cost.
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
    /// Print the next sweep as `start_x,start_y,end_x,end_y,width`.
    Plan {
        source: PathBuf,
        target: PathBuf,
        #[arg(long, default_value = "ours")]
        method: Method,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Config file supplying `planner.*` values.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Simulate one sweep and write the resulting grid.
    Simulate {
        source: PathBuf,
        /// Sweep end points `x0,y0,x1,y1` in meters.
        #[arg(long, value_parser = parse_sweep)]
        sweep: [f64; 4],
        /// Config file supplying `sim.*`, `planner.spatula_width` and `seed`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output grid file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one closed-loop episode described by a task config.
    Episode {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a batch of episodes and write metric and quantile tables.
    Experiment {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; overrides `workers` in the config (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn runtime(context: impl Display) -> impl FnOnce(&dyn Display) -> Failure {
    move |e| Failure::Runtime(format!("{context}: {e}"))
}

fn parse_sweep(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!(
            "expected x0,y0,x1,y1, found {} values",
            parts.len()
        ));
    }
    let mut out = [0.0; 4];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| format!("`{p}` is not a number"))?;
    }
    Ok(out)
}

fn load(path: &Path) -> Result<otsweep::HeightMap, Failure> {
    load_grid(path).map_err(|e| runtime(path.display())(&e))
}

fn config(path: Option<&Path>) -> Result<Option<ConfigFile>, Failure> {
    path.map(ConfigFile::load)
        .transpose()
        .map_err(Failure::from)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| runtime(path.display())(&e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Emd { a, b, p } => {
            if !(p.is_finite() && p > 0.0) {
                return Err(Failure::Config(format!(
                    "--p: must be a positive number, got {p}"
                )));
            }
            let (a_map, b_map) = (load(&a)?, load(&b)?);
            let na = a_map.normalize().map_err(|e| runtime(a.display())(&e))?;
            let nb = b_map.normalize().map_err(|e| runtime(b.display())(&e))?;
            let d = emd(&na, &nb, p).map_err(|e| runtime("emd")(&e))?;
            println!("{d}");
        }
        Command::Plan {
            source,
            target,
            method,
            seed,
            config: cfg_path,
        } => {
            let planner = match config(cfg_path.as_deref())? {
                Some(c) => c.planner()?,
                None => PlannerConfig::default(),
            };
            let (s, t) = (load(&source)?, load(&target)?);
            let cost =
                ground_cost(s.geometry(), t.geometry(), 1.0).map_err(|e| runtime("plan")(&e))?;
            let plan = transport_plan(&s, &t, &cost).map_err(|e| runtime("plan")(&e))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match plan_action(method, &s, &t, &plan, &planner, &mut rng)? {
                Some(a) => println!("{a}"),
                None => eprintln!("no action needed (emd {} m)", plan.cost()),
            }
        }
        Command::Simulate {
            source,
            sweep,
            config: cfg_path,
            out,
        } => {
            let cfg = config(cfg_path.as_deref())?;
            let (width, sim) = match &cfg {
                Some(c) => {
                    let seed: u64 = c.get_or("seed", 0)?;
                    (c.planner()?.spatula_width, c.sim()?.with_seed(seed))
                }
                None => (PlannerConfig::default().spatula_width, SimConfig::default()),
            };
            let [x0, y0, x1, y1] = sweep;
            let action = SweepAction::new(Vec2::new(x0, y0), Vec2::new(x1, y1), width)
                .map_err(|e| Failure::Config(format!("--sweep: {e}")))?;
            let map = load(&source)?;
            let step = apply_sweep(&map, &action, &sim).map_err(|e| runtime("simulate")(&e))?;
            if step.degenerate {
                eprintln!("warning: the sweep covers no cell inside the workspace; grid unchanged");
            }
            match out {
                Some(path) => {
                    save_grid(&step.map, &path).map_err(|e| runtime(path.display())(&e))?
                }
                None => print!("{}", write_grid(&step.map)),
            }
        }
        Command::Episode {
            config: cfg_path,
            out,
        } => {
            let cfg = ConfigFile::load(&cfg_path)?;
            let spec = TaskSpec::from_config(&cfg)?;
            let record = run_episode(&spec)?;
            fs::create_dir_all(&out).map_err(|e| runtime(out.display())(&e))?;
            let mut metrics = format!("{METRIC_CSV_HEADER}\n");
            record.metrics.csv_rows(&mut metrics);
            write(&out.join("metrics.csv"), &metrics)?;
            write(&out.join("actions.csv"), &record.actions_csv())?;
            write(&out.join("final.grid"), &write_grid(record.final_map()))?;
            let (first, last) = (record.metrics.first(), record.metrics.last());
            if let (Some(f), Some(l)) = (first, last) {
                println!(
                    "{}: {} sweeps, stop {}, emd {} -> {} m, iou {:.3}",
                    spec.id,
                    record.steps.len(),
                    record.stop.name(),
                    f.emd,
                    l.emd,
                    l.iou
                );
            }
        }
        Command::Experiment {
            config: cfg_path,
            out,
            workers,
        } => {
            let cfg = ConfigFile::load(&cfg_path)?;
            let mut exp = ExperimentConfig::from_config(&cfg)?;
            if let Some(w) = workers {
                exp.workers = w;
            }
            let output = run_experiment(&exp, Some(&out))?;
            println!(
                "{} episodes written to {}",
                output.records.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("otsweep: configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("otsweep: {msg}");
            ExitCode::from(3)
        }
    }
}
