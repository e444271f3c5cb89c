use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{mix_seed, HarnessError, Method, Result, TaskSpec};
use crate::grid::HeightMap;
use crate::metrics::{default_occupancy_threshold, iou, MetricRecord, MetricSeries};
use crate::ot::ground_cost;
use crate::ot::TransportPlan;
use crate::planner::{
    baseline_diff_map, max_ot_from_plan, select_sweep, transport_plan, PlannerConfig, PlannerError,
    SweepAction, SweepDecision, DIFF_MAP_ATTEMPTS,
};
use crate::sim::apply_sweep;

const PLANNER_STREAM: u64 = 0x706c_616e;
const SIM_STREAM: u64 = 0x7369_6d75;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Every budgeted sweep was executed.
    Budget,
    /// EMD fell to the convergence threshold.
    Converged,
    /// The planner produced no sweep (no usable candidate or empty difference maps).
    NoAction,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Budget => "budget",
            StopReason::Converged => "converged",
            StopReason::NoAction => "no_action",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStep {
    pub action: SweepAction,
    /// Simulated map after the sweep.
    pub map: HeightMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub spec: TaskSpec,
    pub source: HeightMap,
    pub target: HeightMap,
    pub steps: Vec<EpisodeStep>,
    /// One row per state: the initial map and the map after each sweep.
    pub metrics: MetricSeries,
    pub stop: StopReason,
}

impl EpisodeRecord {
    pub fn final_map(&self) -> &HeightMap {
        self.steps.last().map_or(&self.source, |s| &s.map)
    }

    /// `iteration,start_x,start_y,end_x,end_y,width` rows with header.
    pub fn actions_csv(&self) -> String {
        let mut out = String::from("iteration,start_x,start_y,end_x,end_y,width\n");
        for (k, s) in self.steps.iter().enumerate() {
            out.push_str(&format!("{},{}\n", k + 1, s.action));
        }
        out
    }
}

/// Perceive, plan, act: measures the current map, plans one sweep with the
/// configured method against it, simulates it, and repeats until the budget
/// is spent or the planner has nothing left to do.
pub fn run_episode(spec: &TaskSpec) -> Result<EpisodeRecord> {
    let (source, target) = spec.build_maps().map_err(|e| HarnessError::Episode {
        episode: spec.id.clone(),
        iteration: 0,
        source: Box::new(e),
    })?;
    run_episode_on(spec, source, target)
}

/// [`run_episode`] on explicit maps; the task's source and target fields are ignored.
pub fn run_episode_on(
    spec: &TaskSpec,
    source: HeightMap,
    target: HeightMap,
) -> Result<EpisodeRecord> {
    let context = |iteration: usize| {
        let id = spec.id.clone();
        move |e: HarnessError| HarnessError::Episode {
            episode: id,
            iteration,
            source: Box::new(e),
        }
    };
    spec.validate().map_err(context(0))?;
    let geometry = *source.geometry();
    let cost = ground_cost(&geometry, &geometry, 1.0).map_err(|e| context(0)(e.into()))?;
    let threshold = default_occupancy_threshold(&target);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, PLANNER_STREAM));

    let mut metrics = MetricSeries::new(spec.id.clone());
    let mut steps: Vec<EpisodeStep> = Vec::new();
    let mut stop = StopReason::Budget;
    for iteration in 0..=spec.iterations {
        let current = steps.last().map_or(&source, |s| &s.map);
        let step = (|| -> Result<Option<EpisodeStep>> {
            let plan = transport_plan(current, &target, &cost)?;
            let emd = plan.cost();
            metrics.push(MetricRecord {
                iteration,
                emd,
                iou: iou(current, &target, threshold),
            })?;
            if iteration == spec.iterations {
                return Ok(None);
            }
            if emd <= spec.planner.convergence_emd {
                stop = StopReason::Converged;
                return Ok(None);
            }
            let Some(action) = plan_action(
                spec.method,
                current,
                &target,
                &plan,
                &spec.planner,
                &mut rng,
            )?
            else {
                stop = StopReason::NoAction;
                return Ok(None);
            };
            let sim = spec
                .sim
                .with_seed(mix_seed(mix_seed(spec.seed, SIM_STREAM), iteration as u64));
            let simulated = apply_sweep(current, &action, &sim)?;
            Ok(Some(EpisodeStep {
                action,
                map: simulated.map,
            }))
        })()
        .map_err(context(iteration))?;
        match step {
            Some(s) => steps.push(s),
            None => break,
        }
    }
    Ok(EpisodeRecord {
        spec: spec.clone(),
        source,
        target,
        steps,
        metrics,
        stop,
    })
}

/// One planning step of the closed loop: the sweep `method` picks for
/// `current` given its transport plan to `target`, or `None` when the method
/// has nothing to offer.
pub fn plan_action(
    method: Method,
    current: &HeightMap,
    target: &HeightMap,
    plan: &TransportPlan,
    planner: &PlannerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Option<SweepAction>> {
    let geometry = current.geometry();
    let planned = match method {
        Method::Ours => {
            // An empty candidate list above the convergence threshold only
            // means every sampled edge was short; redraw with the same edge
            // budget the difference-map baseline gets.
            let rounds = DIFF_MAP_ATTEMPTS.div_ceil(planner.num_samples).max(1);
            let mut chosen = Err(PlannerError::NoNonTrivialEdge);
            for _ in 0..rounds {
                if let SweepDecision::Sweep { action, .. } =
                    select_sweep(plan, geometry, planner, rng)?
                {
                    chosen = Ok(action);
                    break;
                }
            }
            chosen
        }
        Method::MaxOt => max_ot_from_plan(plan, geometry, planner),
        Method::DiffMap => baseline_diff_map(current, target, planner, rng),
    };
    match planned {
        Ok(a) => Ok(Some(a)),
        Err(
            PlannerError::NoNonTrivialEdge
            | PlannerError::Converged
            | PlannerError::SamplingExhausted(_),
        ) => Ok(None),
        Err(e) => Err(e.into()),
    }
}
