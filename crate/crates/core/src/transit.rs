//! Step 2: grasps and transition configurations, one robot at a time.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;

use rand::Rng;

use crate::deadline::Deadline;
use crate::geom::{compose, inverse, Config, Placed, Pose2, RigidBodies};
use crate::placement::{CacheEntry, PlacementSolution};
use crate::rng::{labeled_rng, PlannerRng};
use crate::scene::{MovableId, MovableSpec, RobotSpec, Scenario};
use crate::task::{ActionId, ActionKind, Grasp, TaskPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureCause {
    NoGrasp,
    Disconnected,
    StepTimeout,
}

/// A step could not satisfy the constraints of one action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepFailure {
    pub action: ActionId,
    pub cause: FailureCause,
    pub blockers: BTreeSet<MovableId>,
}

impl fmt::Display for StepFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}", self.cause, self.action)?;
        if !self.blockers.is_empty() {
            write!(f, " (blocked by movables {:?})", self.blockers)?;
        }
        Ok(())
    }
}

impl std::error::Error for StepFailure {}

#[derive(Debug, Clone)]
pub struct TransitParams {
    pub n_grasp: usize,
    pub clearance: f64,
    pub seed: u64,
    pub deadline: Deadline,
}

impl Default for TransitParams {
    fn default() -> Self {
        TransitParams {
            n_grasp: 12,
            clearance: 0.03,
            seed: 0,
            deadline: Deadline::never(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransitionSolution {
    /// Keyed by transit; the paired transfer uses the same grasp.
    pub grasp_of: BTreeMap<ActionId, Grasp>,
    pub config_of: BTreeMap<ActionId, Config>,
    /// Sample index of each chosen grasp; keys the backtracking tabu set.
    pub grasp_index: BTreeMap<ActionId, usize>,
}

impl TransitionSolution {
    /// Grasp used by action `i`, looked up through its transit.
    pub fn grasp_for(&self, plan: &TaskPlan, i: usize) -> Option<&Grasp> {
        let s = match plan.action(i).kind {
            ActionKind::Transit => i,
            ActionKind::Transfer => plan.partner(i),
        };
        self.grasp_of.get(&plan.action(s).id)
    }
}

/// Robot-center distance from the object center at which both bodies touch.
pub fn contact_distance(robot: &RobotSpec, movable: &MovableSpec) -> f64 {
    robot.radius() + movable.body.bounding_radius()
}

/// `n` grasps with the robot center at distance uniform in
/// `[contact + 2 * clearance, reach]` and approach angle uniform.
pub fn sample_grasps(
    robot: &RobotSpec,
    movable: &MovableSpec,
    rng: &mut PlannerRng,
    n: usize,
    clearance: f64,
) -> Vec<Grasp> {
    assert!(n >= 1, "sample_grasps needs n >= 1");
    let lo = (contact_distance(robot, movable) + 2.0 * clearance).min(robot.reach);
    let hi = robot.reach;
    (0..n)
        .map(|_| {
            let d = lo + rng.gen::<f64>() * (hi - lo);
            let approach = rng.gen_range(-PI..PI);
            Grasp {
                r: robot.id,
                m: movable.id,
                gamma: Pose2::new(d, 0.0, approach),
            }
        })
        .collect()
}

/// The configuration `q` with `compose(q, gamma) = object_pose`.
pub fn solve_kin(grasp: &Grasp, object_pose: Pose2) -> Config {
    compose(object_pose, inverse(grasp.gamma))
}

fn blockers_at(robot: &RigidBodies, q: Config, scene: &Scenario, entry: &CacheEntry, fixed: &[Placed], margin: f64) -> Option<BTreeSet<MovableId>> {
    let bodies = robot.placed_at(q);
    let hit = |o: &Placed| bodies.iter().any(|b| b.near(o, margin));
    let mut blockers = BTreeSet::new();
    let mut blocked = fixed.iter().any(hit);
    for obj in &entry.at_end {
        let body = &scene.movable(obj.movable).expect("cached movable exists").body;
        if hit(&body.place(obj.pose)) {
            blockers.insert(obj.movable);
            blocked = true;
        }
    }
    blocked.then_some(blockers)
}

pub fn solve_transitions(
    scene: &Scenario,
    plan: &TaskPlan,
    placements: &PlacementSolution,
    params: &TransitParams,
    tabu: &BTreeSet<(ActionId, usize)>,
) -> Result<TransitionSolution, StepFailure> {
    let fixed = scene.fixed_placed();
    let mut sol = TransitionSolution::default();
    for s in (0..plan.len()).filter(|&i| plan.action(i).kind == ActionKind::Transit) {
        let f = plan.partner(s);
        let (sa, fa) = (plan.action(s), plan.action(f));
        let robot = scene.robot(sa.r).expect("validated robot");
        let movable = scene.movable(sa.m).expect("validated movable");
        let body = RigidBodies::single(robot.body.clone());
        let p0 = placements.pick_pose(s).expect("every transit removes a stay");
        let p1 = placements.pose_of[&fa.id];
        let entry_s = placements.cache.get(&sa.id).expect("cache covers every action");
        let entry_f = placements.cache.get(&fa.id).expect("cache covers every action");

        let mut rng = labeled_rng(params.seed, &format!("grasp/{}", sa.id));
        let grasps = sample_grasps(robot, movable, &mut rng, params.n_grasp.max(1), params.clearance);
        let mut pick_failures = 0;
        let mut tried = 0;
        let mut blockers = BTreeSet::new();
        let mut chosen = None;
        for (i, g) in grasps.iter().enumerate() {
            if params.deadline.expired() {
                return Err(StepFailure {
                    action: sa.id.clone(),
                    cause: FailureCause::StepTimeout,
                    blockers: BTreeSet::new(),
                });
            }
            if tabu.contains(&(sa.id.clone(), i)) {
                continue;
            }
            tried += 1;
            let q0 = solve_kin(g, p0);
            if let Some(b) = blockers_at(&body, q0, scene, entry_s, &fixed, params.clearance) {
                pick_failures += 1;
                blockers.extend(b);
                continue;
            }
            let q1 = solve_kin(g, p1);
            if let Some(b) = blockers_at(&body, q1, scene, entry_f, &fixed, params.clearance) {
                blockers.extend(b);
                continue;
            }
            chosen = Some((i, *g, q0, q1));
            break;
        }
        let Some((i, g, q0, q1)) = chosen else {
            let action = if tried > 0 && pick_failures == tried { &sa.id } else { &fa.id };
            return Err(StepFailure {
                action: action.clone(),
                cause: FailureCause::NoGrasp,
                blockers,
            });
        };
        sol.grasp_of.insert(sa.id.clone(), g);
        sol.grasp_index.insert(sa.id.clone(), i);
        sol.config_of.insert(sa.id.clone(), q0);
        sol.config_of.insert(fa.id.clone(), q1);
    }
    Ok(sol)
}
