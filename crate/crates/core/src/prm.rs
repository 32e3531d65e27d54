//! Step 3: per-action roadmaps and individual shortest paths.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use rand::Rng;
use thiserror::Error;

use crate::deadline::Deadline;
use crate::geom::{config_distance, compose, Config, Placed, Pose2, RigidBodies};
use crate::placement::PlacementSolution;
use crate::rng::{labeled_rng, PlannerRng};
use crate::scene::{Bounds, MovableId, MovableSpec, RobotSpec, Scenario};
use crate::task::{ActionId, ActionKind, Grasp, TaskPlan};
use crate::transit::{FailureCause, StepFailure, TransitionSolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrmParams {
    pub n: usize,
    pub k: usize,
    pub step: f64,
    pub clearance: f64,
    pub rotation_weight: f64,
}

impl Default for PrmParams {
    fn default() -> Self {
        PrmParams {
            n: 200,
            k: 10,
            step: 0.05,
            clearance: 0.03,
            rotation_weight: 0.5,
        }
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum PrmError {
    #[error("start or goal configuration is in collision")]
    InvalidEndpoint,
    #[error("start and goal are in different components")]
    Disconnected,
}

#[derive(Debug, Clone)]
pub struct Roadmap {
    pub vertices: Vec<Config>,
    /// Sorted neighbor lists with edge lengths.
    pub adj: Vec<Vec<(usize, f64)>>,
    pub start: usize,
    pub goal: usize,
}

impl Roadmap {
    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edge_length(&self, a: usize, b: usize) -> Option<f64> {
        self.adj[a].iter().find(|(v, _)| *v == b).map(|(_, w)| *w)
    }

    /// Uniform-cost search from `from`; returns (distance, predecessor) per vertex.
    pub fn dijkstra(&self, from: usize) -> (Vec<f64>, Vec<Option<usize>>) {
        let n = self.vertices.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[from] = 0.0;
        heap.push(Item(0.0, from));
        while let Some(Item(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adj[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = Some(u);
                    heap.push(Item(nd, v));
                }
            }
        }
        (dist, pred)
    }

    /// Shortest start-to-goal vertex path and its length.
    pub fn shortest_path(&self) -> Option<(Vec<usize>, f64)> {
        let (dist, pred) = self.dijkstra(self.start);
        if !dist[self.goal].is_finite() {
            return None;
        }
        let mut path = vec![self.goal];
        while let Some(p) = pred[*path.last().unwrap()] {
            path.push(p);
        }
        path.reverse();
        Some((path, dist[self.goal]))
    }
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Robot body plus the held object posed by its grasp.
pub fn carried_bodies(robot: &RobotSpec, held: Option<(&MovableSpec, &Grasp)>) -> RigidBodies {
    let mut parts = vec![(robot.body.clone(), Pose2::IDENTITY)];
    if let Some((m, g)) = held {
        parts.push((m.body.clone(), g.gamma));
    }
    RigidBodies::new(parts)
}

/// Samples up to `n` free configurations in `bounds`, connects each to its
/// `k` nearest neighbours by swept-valid edges.
pub fn build_roadmap(
    bodies: &RigidBodies,
    start: Config,
    goal: Config,
    obstacles: &[Placed],
    bounds: Bounds,
    params: &PrmParams,
    rng: &mut PlannerRng,
    deadline: Deadline,
) -> Result<Roadmap, PrmError> {
    let margin = params.clearance;
    if bodies.hits_at(start, obstacles, margin) || bodies.hits_at(goal, obstacles, margin) {
        return Err(PrmError::InvalidEndpoint);
    }
    let mut vertices = vec![start, goal];
    let mut attempts = 0;
    while vertices.len() < params.n + 2 && attempts < 20 * params.n.max(1) {
        attempts += 1;
        let q = Pose2::new(
            bounds.min[0] + rng.gen::<f64>() * bounds.width(),
            bounds.min[1] + rng.gen::<f64>() * bounds.height(),
            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        );
        if !bodies.hits_at(q, obstacles, margin) {
            vertices.push(q);
        }
    }
    let n = vertices.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut uf = UnionFind((0..n).collect());
    let mut tried = std::collections::BTreeSet::new();
    let dist = |a: usize, b: usize| config_distance(vertices[a], vertices[b], params.rotation_weight);
    for u in 0..n {
        if deadline.expired() {
            break;
        }
        let mut near: Vec<(f64, usize)> = (0..n).filter(|&v| v != u).map(|v| (dist(u, v), v)).collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(d, v) in near.iter().take(params.k) {
            if !tried.insert((u.min(v), u.max(v))) {
                continue;
            }
            if bodies.sweep_clear(vertices[u], vertices[v], obstacles, params.step, margin) {
                adj[u].push((v, d));
                adj[v].push((u, d));
                uf.union(u, v);
            }
        }
    }
    for list in &mut adj {
        list.sort_by_key(|e| e.0);
    }
    if uf.find(0) != uf.find(1) {
        return Err(PrmError::Disconnected);
    }
    Ok(Roadmap {
        vertices,
        adj,
        start: 0,
        goal: 1,
    })
}

/// Roadmaps built earlier in a run, keyed by every input of `build_roadmap`.
/// Backtracking usually changes one action; the others are reused as they are.
#[derive(Debug, Default)]
pub struct RoadmapMemo {
    built: HashMap<String, Result<Roadmap, PrmError>>,
}

impl RoadmapMemo {
    #[allow(clippy::too_many_arguments)]
    fn build(
        &mut self,
        label: &str,
        seed: u64,
        bodies: &RigidBodies,
        start: Config,
        goal: Config,
        obstacles: &[Placed],
        bounds: Bounds,
        params: &PrmParams,
        deadline: Deadline,
    ) -> Result<Roadmap, PrmError> {
        let key = format!("{seed}|{label}|{bodies:?}|{start:?}|{goal:?}|{obstacles:?}|{bounds:?}|{params:?}");
        if let Some(r) = self.built.get(&key) {
            return r.clone();
        }
        let mut rng = labeled_rng(seed, label);
        let r = build_roadmap(bodies, start, goal, obstacles, bounds, params, &mut rng, deadline);
        // A build cut short by the deadline is not a function of its inputs.
        if !deadline.expired() {
            self.built.insert(key, r.clone());
        }
        r
    }
}

#[derive(Debug, Clone)]
pub struct ActionPath {
    pub roadmap: Roadmap,
    pub path: Vec<usize>,
    pub cost: f64,
    pub held: Option<MovableId>,
}

#[derive(Debug, Clone, Default)]
pub struct IndividualPlan {
    pub per_action: BTreeMap<ActionId, ActionPath>,
    /// Per robot, a roadmap from its final configuration back to its initial
    /// one, used to move finished robots out of the way.
    pub park: BTreeMap<crate::scene::RobotId, Roadmap>,
}

impl IndividualPlan {
    /// Concatenated configuration sequence of one robot.
    pub fn robot_sequence(&self, plan: &TaskPlan, r: crate::scene::RobotId) -> Vec<Config> {
        let mut out: Vec<Config> = Vec::new();
        for &i in plan.robot_actions(r) {
            let ap = &self.per_action[&plan.action(i).id];
            let skip = usize::from(!out.is_empty());
            out.extend(ap.path.iter().skip(skip).map(|&v| ap.roadmap.vertices[v]));
        }
        out
    }
}

/// Start configuration of action `i`: the previous transition or the initial config.
pub fn start_config(scene: &Scenario, plan: &TaskPlan, transitions: &TransitionSolution, i: usize) -> Config {
    match plan.prev_of(i) {
        Some(p) => transitions.config_of[&plan.action(p).id],
        None => scene.initial.robot_configs[&plan.action(i).r],
    }
}

/// Obstacles for action `i` with other robots absent: fixed shapes plus every
/// object possibly in place while it runs, minus the held one. Objects that
/// overlap the start or goal body are left out; the composite search checks
/// them against the actual state.
pub fn action_obstacles(
    scene: &Scenario,
    plan: &TaskPlan,
    placements: &PlacementSolution,
    bodies: &RigidBodies,
    start: Config,
    goal: Config,
    i: usize,
    clearance: f64,
) -> Vec<Placed> {
    let a = plan.action(i);
    let held = (a.kind == ActionKind::Transfer).then_some(a.m);
    let entry = placements.cache.get(&a.id).expect("cache covers every action");
    let mut obstacles = scene.fixed_placed();
    let ends = [bodies.placed_at(start), bodies.placed_at(goal)];
    for obj in &entry.during {
        if Some(obj.movable) == held {
            continue;
        }
        let placed = scene.movable(obj.movable).expect("cached movable exists").body.place(obj.pose);
        if ends.iter().flatten().any(|b| b.near(&placed, clearance)) {
            log::debug!("{}: movable {} at an endpoint left to the composite search", a.id, obj.movable);
            continue;
        }
        obstacles.push(placed);
    }
    obstacles
}

pub fn plan_individual(
    scene: &Scenario,
    plan: &TaskPlan,
    placements: &PlacementSolution,
    transitions: &TransitionSolution,
    params: &PrmParams,
    seed: u64,
    salt: u64,
    deadline: Deadline,
    memo: &mut RoadmapMemo,
) -> Result<IndividualPlan, StepFailure> {
    let bounds = scene.bounds();
    let mut out = IndividualPlan::default();
    for i in 0..plan.len() {
        let a = plan.action(i);
        let fail = |cause| StepFailure {
            action: a.id.clone(),
            cause,
            blockers: Default::default(),
        };
        if deadline.expired() {
            return Err(fail(FailureCause::StepTimeout));
        }
        let robot = scene.robot(a.r).expect("validated robot");
        let held = match a.kind {
            ActionKind::Transfer => {
                let g = transitions.grasp_for(plan, i).expect("transfer has a grasp");
                Some((scene.movable(a.m).expect("validated movable"), g))
            }
            ActionKind::Transit => None,
        };
        let bodies = carried_bodies(robot, held);
        let start = start_config(scene, plan, transitions, i);
        let goal = transitions.config_of[&a.id];
        let obstacles = action_obstacles(scene, plan, placements, &bodies, start, goal, i, params.clearance);
        let label = format!("prm/{}/{}", a.id, salt);
        let roadmap = memo.build(&label, seed, &bodies, start, goal, &obstacles, bounds, params, deadline).map_err(|e| {
            log::debug!("{}: roadmap failed: {e}", a.id);
            fail(FailureCause::Disconnected)
        })?;
        let (path, cost) = roadmap.shortest_path().ok_or_else(|| fail(FailureCause::Disconnected))?;
        out.per_action.insert(
            a.id.clone(),
            ActionPath {
                roadmap,
                path,
                cost,
                held: held.map(|(m, _)| m.id),
            },
        );
    }
    let fixed = scene.fixed_placed();
    for robot in &scene.robots {
        let home = scene.initial.robot_configs[&robot.id];
        let Some(&last) = plan.robot_actions(robot.id).last() else { continue };
        let end = transitions.config_of[&plan.action(last).id];
        if config_distance(home, end, params.rotation_weight) < params.step {
            continue;
        }
        let label = format!("park/{}/{}", robot.id, salt);
        let bodies = RigidBodies::single(robot.body.clone());
        match memo.build(&label, seed, &bodies, end, home, &fixed, bounds, params, deadline) {
            Ok(rm) => {
                out.park.insert(robot.id, rm);
            }
            Err(e) => log::debug!("robot {}: no parking roadmap: {e}", robot.id),
        }
    }
    Ok(out)
}

/// Config of a held object's frame for robot config `q`.
pub fn held_pose(q: Config, grasp: &Grasp) -> Pose2 {
    compose(q, grasp.gamma)
}
