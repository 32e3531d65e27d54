//! Orchestration of the four refinement steps with backtracking, the
//! synchronous baseline and the ablation modes.

mod ablation;
mod retime;
mod solution;
mod sync;
mod validate;
mod world;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use ablation::MergedFilter;
pub use solution::{path_makespan, Assignment, Solution, Waypoint};
pub use sync::{execute_synchronous, SyncError};
pub use validate::{validate_solution, ValidationReport, Violation, ViolationKind};
pub use world::PlanWorld;

use crate::deadline::Deadline;
use crate::drrt::{drrt_search, CompositePath, CompositeWorld, DrrtParams};
use crate::placement::{solve_placements, AcceptAll, CandidateFilter, PlacementError, PlacementParams, PlacementSolution};
use crate::prm::{plan_individual, PrmParams, RoadmapMemo};
use crate::rng::labeled_rng;
use crate::scene::Scenario;
use crate::task::{ActionId, ActionKind, OrderingSet, TaskPlan};
use crate::transit::{solve_transitions, FailureCause, StepFailure, TransitParams, TransitionSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Merge12,
    Merge123,
    Synchronous,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Full, Mode::Merge12, Mode::Merge123, Mode::Synchronous];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::Merge12 => "merge12",
            Mode::Merge123 => "merge123",
            Mode::Synchronous => "synchronous",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?}; expected one of full, merge12, merge123, synchronous"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BacktrackPolicy {
    Stop,
    Backtrack,
    ExtendSamples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineParams {
    pub seed: u64,
    pub mode: Mode,
    pub n_place: usize,
    pub n_grasp: usize,
    pub n_prm: usize,
    pub k_prm: usize,
    /// Limit for one composite-search attempt.
    pub step_time_limit_s: f64,
    pub overall_time_limit_s: f64,
    pub backtrack_policy: BacktrackPolicy,
    /// Collision-check resolution along motions.
    pub step: f64,
    /// Gap the planner keeps between all bodies.
    pub clearance: f64,
    pub rotation_weight: f64,
    pub goal_bias: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            seed: 0,
            mode: Mode::Full,
            n_place: 10,
            n_grasp: 12,
            n_prm: 200,
            k_prm: 10,
            step_time_limit_s: 30.0,
            overall_time_limit_s: 600.0,
            backtrack_policy: BacktrackPolicy::Backtrack,
            step: 0.05,
            clearance: 0.03,
            rotation_weight: 0.5,
            goal_bias: 0.2,
        }
    }
}

impl PipelineParams {
    pub fn check(&self) -> Result<(), String> {
        let counts = [("n_place", self.n_place), ("n_grasp", self.n_grasp), ("n_prm", self.n_prm), ("k_prm", self.k_prm)];
        for (name, v) in counts {
            if v == 0 {
                return Err(format!("{name} must be at least 1"));
            }
        }
        let positive = [
            ("step_time_limit_s", self.step_time_limit_s),
            ("overall_time_limit_s", self.overall_time_limit_s),
            ("step", self.step),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(format!("{name} must be positive"));
            }
        }
        if !(self.clearance >= 0.0 && self.rotation_weight >= 0.0 && (0.0..=1.0).contains(&self.goal_bias)) {
            return Err("clearance and rotation_weight must be non-negative, goal_bias within [0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepTimes {
    pub placement_s: f64,
    pub transition_s: f64,
    pub roadmap_s: f64,
    pub composite_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Solved(Box<Solution>),
    Infeasible(String),
    Timeout,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Solved(_) => "solution",
            Outcome::Infeasible(_) => "infeasible",
            Outcome::Timeout => "timeout",
        }
    }

    pub fn solution(&self) -> Option<&Solution> {
        match self {
            Outcome::Solved(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub outcome: Outcome,
    pub planning_time_s: f64,
    pub step_times: StepTimes,
    pub backtracks: usize,
    pub makespan: Option<f64>,
}

#[derive(Serialize)]
struct ReportSummary<'a> {
    outcome: &'a str,
    detail: Option<&'a str>,
    planning_time_s: f64,
    step_times: StepTimes,
    backtracks: usize,
    makespan: Option<f64>,
    induced_orderings: Option<usize>,
}

impl RunReport {
    /// One-line JSON summary without the solution body.
    pub fn summary_json(&self) -> String {
        let detail = match &self.outcome {
            Outcome::Infeasible(why) => Some(why.as_str()),
            _ => None,
        };
        serde_json::to_string(&ReportSummary {
            outcome: self.outcome.name(),
            detail,
            planning_time_s: self.planning_time_s,
            step_times: self.step_times,
            backtracks: self.backtracks,
            makespan: self.makespan,
            induced_orderings: self.outcome.solution().map(|s| s.induced.len()),
        })
        .expect("summary serializes")
    }
}

/// Given orderings plus the ones a solution induced.
pub fn final_orderings(plan: &TaskPlan, induced: &[[ActionId; 2]]) -> Result<OrderingSet, crate::task::CycleError> {
    let mut set = plan.prec().clone();
    for [a, b] in induced {
        set = set.add_ordering(a, b)?;
    }
    Ok(set)
}

enum Stop {
    Timeout,
    Infeasible(String),
}

struct Run<'a> {
    scene: &'a Scenario,
    plan: &'a TaskPlan,
    params: &'a PipelineParams,
    overall: Deadline,
    times: StepTimes,
    backtracks: usize,
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *slot += t.elapsed().as_secs_f64();
    out
}

impl Run<'_> {
    fn check_time(&self) -> Result<(), Stop> {
        if self.overall.expired() {
            Err(Stop::Timeout)
        } else {
            Ok(())
        }
    }

    fn placements(&mut self, n_place: usize, tabu: &BTreeSet<(ActionId, usize)>) -> Result<PlacementSolution, Stop> {
        let p = self.params;
        let pp = PlacementParams {
            n_place,
            clearance: p.clearance,
            extend_samples: p.backtrack_policy == BacktrackPolicy::ExtendSamples,
            seed: p.seed,
            deadline: self.overall,
        };
        let prm = PrmParams {
            n: p.n_prm,
            k: p.k_prm,
            step: p.step,
            clearance: p.clearance,
            rotation_weight: p.rotation_weight,
        };
        let mut filter: Box<dyn CandidateFilter + '_> = match p.mode {
            Mode::Full | Mode::Synchronous => Box::new(AcceptAll),
            Mode::Merge12 => Box::new(MergedFilter::new(self.scene, p.n_grasp, p.clearance, p.seed, None, self.overall)),
            Mode::Merge123 => Box::new(MergedFilter::new(self.scene, p.n_grasp, p.clearance, p.seed, Some(prm), self.overall)),
        };
        let (scene, plan) = (self.scene, self.plan);
        let result = timed(&mut self.times.placement_s, || solve_placements(scene, plan, &pp, tabu, filter.as_mut()));
        match result {
            Ok(sol) => Ok(sol),
            Err(PlacementError::StepTimeout) => Err(Stop::Timeout),
            Err(e) => {
                self.check_time()?;
                Err(Stop::Infeasible(e.to_string()))
            }
        }
    }

    fn solve(&mut self) -> Result<Solution, Stop> {
        let p = self.params;
        let (scene, plan) = (self.scene, self.plan);
        let mut n_place = p.n_place;
        let mut n_grasp = p.n_grasp;
        let mut n_prm = p.n_prm;
        let mut tabu_place: BTreeSet<(ActionId, usize)> = BTreeSet::new();
        let mut memo = RoadmapMemo::default();
        'placement: loop {
            self.check_time()?;
            let placements = self.placements(n_place, &tabu_place)?;
            log::info!("placement: {} induced orderings", placements.induced.len());
            let mut tabu_grasp: BTreeSet<(ActionId, usize)> = BTreeSet::new();
            'transition: loop {
                self.check_time()?;
                let tp = TransitParams {
                    n_grasp,
                    clearance: p.clearance,
                    seed: p.seed,
                    deadline: self.overall,
                };
                let result = timed(&mut self.times.transition_s, || {
                    solve_transitions(scene, plan, &placements, &tp, &tabu_grasp)
                });
                let transitions = match result {
                    Ok(t) => t,
                    Err(f) => {
                        self.on_failure(&f)?;
                        log::info!("transition step failed: {f}");
                        self.backtracks += 1;
                        match p.backtrack_policy {
                            BacktrackPolicy::ExtendSamples => {
                                n_place *= 2;
                                n_grasp *= 2;
                            }
                            _ => {
                                let extra = placement_tabu(plan, &placements, &f);
                                if extra.iter().all(|e| tabu_place.contains(e)) {
                                    return Err(Stop::Infeasible(format!("transition step failed: {f}")));
                                }
                                tabu_place.extend(extra);
                            }
                        }
                        continue 'placement;
                    }
                };
                log::info!("transition: {} grasps chosen", transitions.grasp_of.len());
                let mut salt = 0u64;
                loop {
                    self.check_time()?;
                    let prm = PrmParams {
                        n: n_prm,
                        k: p.k_prm,
                        step: p.step,
                        clearance: p.clearance,
                        rotation_weight: p.rotation_weight,
                    };
                    let overall = self.overall;
                    let result = timed(&mut self.times.roadmap_s, || {
                        plan_individual(scene, plan, &placements, &transitions, &prm, p.seed, salt, overall, &mut memo)
                    });
                    let individual = match result {
                        Ok(ind) => ind,
                        Err(f) => {
                            self.on_failure(&f)?;
                            log::info!("roadmap step failed: {f}");
                            self.backtracks += 1;
                            if p.backtrack_policy == BacktrackPolicy::ExtendSamples {
                                n_prm *= 2;
                                salt += 1;
                                continue;
                            }
                            let s = transit_of(plan, &f.action);
                            tabu_grasp.insert((plan.action(s).id.clone(), transitions.grasp_index[&plan.action(s).id]));
                            continue 'transition;
                        }
                    };
                    let t = Instant::now();
                    let composite = self.compose(&placements, &transitions, &individual, salt);
                    self.times.composite_s += t.elapsed().as_secs_f64();
                    match composite {
                        Ok(path) => {
                            let makespan = path_makespan(&path, p.rotation_weight);
                            return Ok(Solution {
                                params: p.clone(),
                                assignment: Assignment::from_steps(&placements, &transitions),
                                induced: placements.induced.to_pairs(),
                                path,
                                makespan,
                            });
                        }
                        Err(blocker) => {
                            self.check_time()?;
                            if p.backtrack_policy == BacktrackPolicy::Stop {
                                return Err(Stop::Timeout);
                            }
                            self.backtracks += 1;
                            // A robot waiting in the way keeps blocking under new roadmaps;
                            // after one retry move its waiting pose through a new grasp.
                            if let (Some(b), true) = (blocker, salt >= 1) {
                                let s = transit_of(plan, &plan.action(b).id);
                                log::info!("composite step failed; new grasp for {}", plan.action(s).id);
                                tabu_grasp.insert((plan.action(s).id.clone(), transitions.grasp_index[&plan.action(s).id]));
                                continue 'transition;
                            }
                            log::info!("composite step failed; rebuilding roadmaps");
                            salt += 1;
                        }
                    }
                }
            }
        }
    }

    /// Stops on timeout or under the stop policy; otherwise lets the caller backtrack.
    fn on_failure(&self, f: &StepFailure) -> Result<(), Stop> {
        self.check_time()?;
        if f.cause == FailureCause::StepTimeout {
            return Err(Stop::Timeout);
        }
        if self.params.backtrack_policy == BacktrackPolicy::Stop {
            return Err(Stop::Infeasible(f.to_string()));
        }
        Ok(())
    }

    fn compose(
        &self,
        placements: &PlacementSolution,
        transitions: &TransitionSolution,
        individual: &crate::prm::IndividualPlan,
        salt: u64,
    ) -> Result<Vec<Waypoint>, Option<usize>> {
        let p = self.params;
        let deadline = self.overall.min(Deadline::after_secs(p.step_time_limit_s));
        if p.mode == Mode::Synchronous {
            return execute_synchronous(
                self.scene,
                self.plan,
                &placements.induced,
                placements,
                transitions,
                individual,
                p.step,
                p.clearance,
                p.rotation_weight,
                deadline,
            )
            .map_err(|e| {
                log::info!("synchronous execution failed: {e:?}");
                match e {
                    SyncError::Deadlock(blocker) => blocker,
                    SyncError::Timeout => None,
                }
            });
        }
        let world = PlanWorld::new(
            self.scene,
            self.plan,
            &placements.induced,
            placements,
            transitions,
            individual,
            p.step,
            p.clearance,
            p.rotation_weight,
        );
        let dp = DrrtParams {
            goal_bias: p.goal_bias,
            random_walk: 0.1,
            deadline,
            max_iterations: usize::MAX,
        };
        let mut rng = labeled_rng(p.seed, &format!("drrt/{salt}"));
        let path = drrt_search(&world, &mut rng, &dp).map_err(|_| None)?;
        Ok(retime::retime(&world, self.plan, &path, p.step, p.clearance).unwrap_or_else(|| composite_waypoints(&world, self.plan, &path)))
    }
}

fn transit_of(plan: &TaskPlan, id: &ActionId) -> usize {
    let i = plan.index_of(id).expect("failure names a plan action");
    match plan.action(i).kind {
        ActionKind::Transit => i,
        ActionKind::Transfer => plan.partner(i),
    }
}

/// Placement samples to exclude after a transition failure: the pose of the
/// object involved, or the poses of the blockers when that pose is initial.
fn placement_tabu(plan: &TaskPlan, placements: &PlacementSolution, f: &StepFailure) -> Vec<(ActionId, usize)> {
    let i = plan.index_of(&f.action).expect("failure names a plan action");
    let placed_by = match plan.action(i).kind {
        ActionKind::Transfer => Some(i),
        ActionKind::Transit => placements.stays.iter().find(|s| s.occ.removed_by == Some(i)).and_then(|s| s.occ.added_by),
    };
    let key = |j: usize| {
        let id = plan.action(j).id.clone();
        let k = placements.sample_of[&id];
        (id, k)
    };
    if let Some(j) = placed_by {
        return vec![key(j)];
    }
    placements
        .stays
        .iter()
        .filter(|s| f.blockers.contains(&s.occ.movable))
        .filter_map(|s| s.occ.added_by)
        .map(key)
        .collect()
}

/// Waypoints of a composite path, with the transitions each step fired.
pub fn composite_waypoints(world: &PlanWorld, plan: &TaskPlan, path: &CompositePath) -> Vec<Waypoint> {
    let mut out = Vec::with_capacity(path.states.len());
    for (k, state) in path.states.iter().enumerate() {
        let configs = (0..world.robots()).map(|r| (world.robot_ids[r], world.config(r, state[r]))).collect();
        let fired = if k == 0 {
            Vec::new()
        } else {
            (0..plan.len())
                .filter(|&i| world.completed(i, state) && !world.completed(i, &path.states[k - 1]))
                .map(|i| plan.action(i).id.clone())
                .collect()
        };
        out.push(Waypoint { configs, fired });
    }
    out
}

/// Runs Steps 1-4 (or the synchronous executor) under the given mode.
pub fn refine(scene: &Scenario, plan: &TaskPlan, params: &PipelineParams) -> RunReport {
    let start = Instant::now();
    let mut run = Run {
        scene,
        plan,
        params,
        overall: Deadline::after_secs(params.overall_time_limit_s),
        times: StepTimes::default(),
        backtracks: 0,
    };
    let outcome = if plan.is_empty() {
        let configs = scene.initial.robot_configs.clone();
        Outcome::Solved(Box::new(Solution {
            params: params.clone(),
            assignment: Assignment {
                placements: Default::default(),
                grasps: Default::default(),
                configs: Default::default(),
            },
            induced: Vec::new(),
            path: vec![Waypoint { configs, fired: Vec::new() }],
            makespan: 0.0,
        }))
    } else {
        match run.solve() {
            Ok(sol) => Outcome::Solved(Box::new(sol)),
            Err(Stop::Timeout) => Outcome::Timeout,
            Err(Stop::Infeasible(why)) => Outcome::Infeasible(why),
        }
    };
    let makespan = outcome.solution().map(|s| s.makespan);
    RunReport {
        outcome,
        planning_time_s: start.elapsed().as_secs_f64(),
        step_times: run.times,
        backtracks: run.backtracks,
        makespan,
    }
}

/// The phase-based baseline over the same Steps 1-3.
pub fn solve_synchronous(scene: &Scenario, plan: &TaskPlan, params: &PipelineParams) -> RunReport {
    let params = PipelineParams {
        mode: Mode::Synchronous,
        ..params.clone()
    };
    refine(scene, plan, &params)
}
