//! Step 4: modified dRRT over the implicit tensor product of per-action
//! roadmaps, with ordering gates at transition configurations.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::deadline::Deadline;
use crate::geom::{angle_diff, config_distance, interpolate, Config, Placed, Pose2, RigidBodies};
use crate::prm::Roadmap;
use crate::rng::PlannerRng;
use crate::scene::Bounds;

/// Per-robot position: (leg index, vertex index in that leg's roadmap).
/// A robot is done once its leg index reaches its required leg count; legs
/// past that are optional parking roadmaps it may still move along.
pub type LegState = (usize, usize);

/// Everything the composite search needs to know about a problem instance.
pub trait CompositeWorld {
    fn robots(&self) -> usize;
    fn legs(&self, r: usize) -> usize;
    fn roadmap(&self, r: usize, leg: usize) -> &Roadmap;
    /// Configuration of a robot without legs.
    fn home(&self, r: usize) -> Config;
    /// Whether robot `r` may enter the goal vertex of `leg` in `state`.
    fn gate_open(&self, r: usize, leg: usize, state: &[LegState]) -> bool;
    /// Validity of the simultaneous move `from -> to` (same legs, before firing).
    fn edge_valid(&self, from: &[LegState], to: &[LegState]) -> bool;
    fn bounds(&self) -> Bounds;
    fn rotation_weight(&self) -> f64;

    fn config(&self, r: usize, s: LegState) -> Config {
        let n = self.legs(r);
        if n == 0 {
            self.home(r)
        } else if s.0 < n {
            self.roadmap(r, s.0).vertices[s.1]
        } else {
            let rm = self.roadmap(r, n - 1);
            rm.vertices[rm.goal]
        }
    }

    /// Legs that must be completed; any further leg is for parking.
    fn required_legs(&self, r: usize) -> usize {
        self.legs(r)
    }

    fn is_done(&self, r: usize, s: LegState) -> bool {
        s.0 >= self.required_legs(r)
    }

    fn can_move(&self, r: usize, s: LegState) -> bool {
        s.0 < self.legs(r)
    }
}

/// Start state with every robot at the start vertex of its first leg.
pub fn initial_state<W: CompositeWorld + ?Sized>(world: &W) -> Vec<LegState> {
    (0..world.robots())
        .map(|r| if world.legs(r) == 0 { (0, 0) } else { (0, world.roadmap(r, 0).start) })
        .collect()
}

/// Fires every transition whose goal vertex has been reached.
pub fn fire<W: CompositeWorld + ?Sized>(world: &W, state: &mut [LegState]) {
    for (r, s) in state.iter_mut().enumerate() {
        let n = world.legs(r);
        if s.0 < world.required_legs(r) && s.1 == world.roadmap(r, s.0).goal {
            s.0 += 1;
            s.1 = if s.0 < n { world.roadmap(r, s.0).start } else { 0 };
        }
    }
}

pub fn all_done<W: CompositeWorld + ?Sized>(world: &W, state: &[LegState]) -> bool {
    state.iter().enumerate().all(|(r, s)| world.is_done(r, *s))
}

/// Whether robot `r` may step to vertex `w` of its current leg.
pub fn step_allowed<W: CompositeWorld + ?Sized>(world: &W, state: &[LegState], r: usize, w: usize) -> bool {
    let (leg, _) = state[r];
    w != world.roadmap(r, leg).goal || world.gate_open(r, leg, state)
}

/// Neighbour of each robot's vertex closest to its sample (or stay), with gates
/// respected. When every robot would stay, the single best move is returned.
pub fn oracle_expand<W: CompositeWorld + ?Sized>(world: &W, state: &[LegState], sample: &[Config]) -> Option<Vec<LegState>> {
    let w = world.rotation_weight();
    let mut target = state.to_vec();
    let mut best_single: Option<(f64, usize, usize)> = None;
    for r in 0..world.robots() {
        if !world.can_move(r, state[r]) {
            continue;
        }
        let (leg, v) = state[r];
        let rm = world.roadmap(r, leg);
        let here = config_distance(rm.vertices[v], sample[r], w);
        let mut best: Option<(f64, usize)> = None;
        for &(n, _) in &rm.adj[v] {
            if !step_allowed(world, state, r, n) {
                continue;
            }
            let d = config_distance(rm.vertices[n], sample[r], w);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, n));
            }
        }
        if let Some((d, n)) = best {
            if d < here {
                target[r].1 = n;
            }
            let gain = d - here;
            if best_single.is_none_or(|(g, _, _)| gain < g) {
                best_single = Some((gain, r, n));
            }
        }
    }
    if target.as_slice() == state {
        let (_, r, n) = best_single?;
        target[r].1 = n;
    }
    Some(target)
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum DrrtError {
    #[error("composite search exceeded its time limit")]
    Timeout,
}

#[derive(Debug, Clone, Copy)]
pub struct DrrtParams {
    pub goal_bias: f64,
    pub random_walk: f64,
    pub deadline: Deadline,
    /// Iteration cap on top of the deadline; `usize::MAX` for none.
    pub max_iterations: usize,
}

impl Default for DrrtParams {
    fn default() -> Self {
        DrrtParams {
            goal_bias: 0.2,
            random_walk: 0.1,
            deadline: Deadline::after_secs(30.0),
            max_iterations: usize::MAX,
        }
    }
}

/// Sequence of composite states from the start to the all-done state.
/// Consecutive states differ by one composite edge followed by firing.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositePath {
    pub states: Vec<Vec<LegState>>,
}

impl CompositePath {
    /// Per-step moved length of every robot.
    pub fn step_lengths<W: CompositeWorld + ?Sized>(&self, world: &W) -> Vec<Vec<f64>> {
        self.states
            .windows(2)
            .map(|w| {
                (0..world.robots())
                    .map(|r| {
                        let a = world.config(r, w[0][r]);
                        let b = world.config(r, w[1][r]);
                        config_distance(a, b, world.rotation_weight())
                    })
                    .collect()
            })
            .collect()
    }

    /// Sum over composite steps of the longest individual move.
    pub fn makespan<W: CompositeWorld + ?Sized>(&self, world: &W) -> f64 {
        self.step_lengths(world)
            .iter()
            .map(|l| l.iter().copied().fold(0.0, f64::max))
            .sum()
    }
}

struct Tables {
    /// Per robot, per leg: shortest distance to goal and next hop toward it.
    to_goal: Vec<Vec<(Vec<f64>, Vec<Option<usize>>)>>,
    /// Per robot, per leg: total path cost of the legs after it.
    rest: Vec<Vec<f64>>,
}

impl Tables {
    fn new<W: CompositeWorld + ?Sized>(world: &W) -> Self {
        let mut to_goal = Vec::new();
        let mut rest = Vec::new();
        for r in 0..world.robots() {
            let per: Vec<_> = (0..world.legs(r)).map(|l| {
                let rm = world.roadmap(r, l);
                rm.dijkstra(rm.goal)
            }).collect();
            let costs: Vec<f64> = (0..world.required_legs(r)).map(|l| per[l].0[world.roadmap(r, l).start]).collect();
            let mut acc = vec![0.0; costs.len() + 1];
            for l in (0..costs.len()).rev() {
                acc[l] = acc[l + 1] + costs[l];
            }
            rest.push(acc[1..].to_vec());
            to_goal.push(per);
        }
        Tables { to_goal, rest }
    }

    fn cost_to_go<W: CompositeWorld + ?Sized>(&self, world: &W, state: &[LegState]) -> f64 {
        (0..world.robots())
            .filter(|&r| !world.is_done(r, state[r]))
            .map(|r| {
                let (l, v) = state[r];
                self.to_goal[r][l].0[v] + self.rest[r][l]
            })
            .sum()
    }

    fn next_hop(&self, r: usize, s: LegState) -> Option<usize> {
        self.to_goal[r][s.0].1[s.1]
    }
}

const UNJAM_PROGRESS: f64 = 1.0;
const UNJAM_BUDGET: usize = 4000;

#[derive(Debug, Clone, Copy)]
struct OrdF64(f64);

impl PartialEq for OrdF64 {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct Node {
    state: Vec<LegState>,
    parent: Option<usize>,
}

struct Tree<'w, W: CompositeWorld + ?Sized> {
    world: &'w W,
    tables: Tables,
    nodes: Vec<Node>,
    index: HashMap<Vec<LegState>, usize>,
    best: usize,
    best_key: (usize, f64),
}

impl<'w, W: CompositeWorld + ?Sized> Tree<'w, W> {
    fn progress_key(&self, state: &[LegState]) -> (usize, f64) {
        let done: usize = state.iter().map(|s| s.0).sum();
        (done, -self.tables.cost_to_go(self.world, state))
    }

    fn insert(&mut self, state: Vec<LegState>, parent: Option<usize>) -> Option<usize> {
        if self.index.contains_key(&state) {
            return None;
        }
        let id = self.nodes.len();
        let key = self.progress_key(&state);
        if key.0 > self.best_key.0 || (key.0 == self.best_key.0 && key.1 > self.best_key.1) {
            self.best = id;
            self.best_key = key;
        }
        self.index.insert(state.clone(), id);
        self.nodes.push(Node { state, parent });
        Some(id)
    }

    fn path_to(&self, mut id: usize) -> CompositePath {
        let mut states = vec![self.nodes[id].state.clone()];
        while let Some(p) = self.nodes[id].parent {
            states.push(self.nodes[p].state.clone());
            id = p;
        }
        states.reverse();
        CompositePath { states }
    }

    /// Tries the proposed move, then subsets of its movers from largest to
    /// smallest, preferring low robot indices. Returns the fired successor.
    fn try_move(&self, from: &[LegState], target: &[LegState]) -> Option<Vec<LegState>> {
        let movers: Vec<usize> = (0..from.len()).filter(|&r| from[r] != target[r]).collect();
        if movers.is_empty() {
            return None;
        }
        let m = movers.len();
        let mut masks: Vec<u32> = if m <= 8 {
            (1..(1u32 << m)).collect()
        } else {
            std::iter::once((1u32 << m.min(31)) - 1).chain((0..m).map(|i| 1 << i)).collect()
        };
        masks.sort_by_key(|&mask| (std::cmp::Reverse(mask.count_ones()), std::cmp::Reverse(mask.reverse_bits())));
        for mask in masks {
            let mut to = from.to_vec();
            for (i, &r) in movers.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    to[r] = target[r];
                }
            }
            if self.world.edge_valid(from, &to) {
                fire(self.world, &mut to);
                return Some(to);
            }
        }
        None
    }

    /// Each unfinished robot steps along its shortest path to goal; robots
    /// whose action is not yet enabled wait at its start.
    fn greedy_target(&self, state: &[LegState]) -> Vec<LegState> {
        let mut target = state.to_vec();
        for r in 0..state.len() {
            if self.world.is_done(r, state[r]) {
                continue;
            }
            let (leg, v) = state[r];
            let rm = self.world.roadmap(r, leg);
            let gate = self.world.gate_open(r, leg, state);
            if v == rm.start && !gate {
                continue;
            }
            if let Some(n) = self.tables.next_hop(r, state[r]) {
                if n != rm.goal || gate {
                    target[r].1 = n;
                }
            }
        }
        target
    }

    /// Follows greedy steps from `id` for at most `limit` steps.
    fn rollout(&mut self, mut id: usize, limit: usize, deadline: Deadline) -> Option<usize> {
        for _ in 0..limit {
            if deadline.expired() {
                return None;
            }
            let state = self.nodes[id].state.clone();
            if all_done(self.world, &state) {
                return Some(id);
            }
            let target = self.greedy_target(&state);
            match self.try_move(&state, &target) {
                Some(next) => id = self.insert(next, Some(id))?,
                None => {
                    let detour = self.unjam(&state, deadline)?;
                    for s in detour {
                        id = self.insert(s, Some(id))?;
                    }
                }
            }
        }
        all_done(self.world, &self.nodes[id].state).then_some(id)
    }

    /// A* search from a stalled state, one robot moving per step,
    /// until every robot that wanted to move has progressed by `UNJAM_PROGRESS`
    /// or completed its leg. Returns the states after `state`.
    fn unjam(&self, state: &[LegState], deadline: Deadline) -> Option<Vec<Vec<LegState>>> {
        let world = self.world;
        let n = world.robots();
        let target = self.greedy_target(state);
        let active: Vec<usize> = (0..n).filter(|&r| target[r] != state[r]).collect();
        if active.is_empty() {
            return None;
        }
        let cost = |s: &[LegState], r: usize| -> f64 {
            if world.is_done(r, s[r]) {
                0.0
            } else {
                self.tables.to_goal[r][s[r].0].0[s[r].1] + self.tables.rest[r][s[r].0]
            }
        };
        let need: Vec<(usize, f64, usize)> = active
            .iter()
            .map(|&r| {
                let leg_left = self.tables.to_goal[r][state[r].0].0[state[r].1];
                (r, cost(state, r) - UNJAM_PROGRESS.min(leg_left) + 1e-9, state[r].0)
            })
            .collect();
        let reached = |s: &[LegState]| need.iter().all(|&(r, c, leg)| s[r].0 > leg || cost(s, r) <= c);
        let h = |s: &[LegState]| (0..n).map(|r| cost(s, r)).sum::<f64>();

        let mut seen: HashMap<Vec<LegState>, usize> = HashMap::new();
        // (state, parent, distance travelled so far)
        let mut nodes: Vec<(Vec<LegState>, Option<usize>, f64)> = vec![(state.to_vec(), None, 0.0)];
        seen.insert(state.to_vec(), 0);
        let mut open = std::collections::BinaryHeap::new();
        let h0 = h(state);
        open.push((std::cmp::Reverse((OrdF64(h0), OrdF64(h0))), 0usize));
        let rot_w = world.rotation_weight();
        let mut expanded = 0;
        while let Some((_, id)) = open.pop() {
            expanded += 1;
            if expanded > UNJAM_BUDGET || deadline.expired() {
                return None;
            }
            let cur = nodes[id].0.clone();
            let g = nodes[id].2;
            for r in 0..n {
                if !world.can_move(r, cur[r]) {
                    continue;
                }
                let (leg, v) = cur[r];
                for &(w, _) in &world.roadmap(r, leg).adj[v] {
                    if !step_allowed(world, &cur, r, w) {
                        continue;
                    }
                    let mut to = cur.clone();
                    to[r].1 = w;
                    if self.index.contains_key(&to) || seen.contains_key(&to) || !world.edge_valid(&cur, &to) {
                        continue;
                    }
                    let mut fired = to.clone();
                    fire(world, &mut fired);
                    if seen.contains_key(&fired) {
                        continue;
                    }
                    let nid = nodes.len();
                    let g2 = g + config_distance(world.config(r, cur[r]), world.config(r, to[r]), rot_w);
                    nodes.push((fired.clone(), Some(id), g2));
                    seen.insert(fired.clone(), nid);
                    if reached(&fired) {
                        let mut out = Vec::new();
                        let mut k = nid;
                        while let Some(p) = nodes[k].1 {
                            out.push(nodes[k].0.clone());
                            k = p;
                        }
                        out.reverse();
                        return Some(out);
                    }
                    let hf = h(&fired);
                    open.push((std::cmp::Reverse((OrdF64(g2 + hf), OrdF64(hf))), nid));
                }
            }
        }
        None
    }

    fn random_walk_target(&self, state: &[LegState], rng: &mut PlannerRng) -> Vec<LegState> {
        let mut target = state.to_vec();
        for r in 0..state.len() {
            if !self.world.can_move(r, state[r]) || rng.gen_bool(0.3) {
                continue;
            }
            let (leg, v) = state[r];
            let options: Vec<usize> = self
                .world
                .roadmap(r, leg)
                .adj[v]
                .iter()
                .map(|e| e.0)
                .filter(|&n| step_allowed(self.world, state, r, n))
                .collect();
            if let Some(&n) = options.choose(rng) {
                target[r].1 = n;
            }
        }
        target
    }

    fn nearest(&self, sample: &[Config]) -> usize {
        let w = self.world.rotation_weight();
        let mut best = (f64::INFINITY, 0);
        for (i, node) in self.nodes.iter().enumerate() {
            let d: f64 = (0..sample.len())
                .map(|r| config_distance(self.world.config(r, node.state[r]), sample[r], w))
                .sum();
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }
}

fn uniform_config(b: Bounds, rng: &mut PlannerRng) -> Config {
    Pose2::new(
        b.min[0] + rng.gen::<f64>() * b.width(),
        b.min[1] + rng.gen::<f64>() * b.height(),
        rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
    )
}

/// Searches the implicit composite roadmap from the initial state until every
/// robot has completed all of its legs.
pub fn drrt_search<W: CompositeWorld + ?Sized>(
    world: &W,
    rng: &mut PlannerRng,
    params: &DrrtParams,
) -> Result<CompositePath, DrrtError> {
    let start = initial_state(world);
    let mut tree = Tree {
        world,
        tables: Tables::new(world),
        nodes: Vec::new(),
        index: HashMap::new(),
        best: 0,
        best_key: (0, f64::NEG_INFINITY),
    };
    let mut start_fired = start.clone();
    fire(world, &mut start_fired);
    tree.insert(start_fired, None);
    if all_done(world, &tree.nodes[0].state) {
        return Ok(tree.path_to(0));
    }
    if let Some(goal) = tree.rollout(0, usize::MAX, params.deadline) {
        return Ok(tree.path_to(goal));
    }
    log::debug!("composite greedy rollout stalled after {} states", tree.nodes.len());
    if log::log_enabled!(log::Level::Debug) {
        let last = &tree.nodes[tree.nodes.len() - 1].state;
        let target = tree.greedy_target(last);
        for r in 0..world.robots() {
            let single: Vec<LegState> = (0..world.robots()).map(|k| if k == r { target[k] } else { last[k] }).collect();
            log::debug!(
                "  robot {r}: at {:?} -> {:?}, gate {}, alone ok {}",
                last[r],
                target[r],
                last[r].0 < world.legs(r) && world.gate_open(r, last[r].0, last),
                single == *last || world.edge_valid(last, &single)
            );
        }
    }

    let bounds = world.bounds();
    for _ in 0..params.max_iterations {
        if params.deadline.expired() {
            return Err(DrrtError::Timeout);
        }
        let u = rng.gen::<f64>();
        let (from, target) = if u < params.goal_bias {
            let id = if rng.gen_bool(0.5) { tree.best } else { rng.gen_range(0..tree.nodes.len()) };
            let state = &tree.nodes[id].state;
            let target = tree.greedy_target(state);
            if target.as_slice() == state.as_slice() {
                (id, tree.random_walk_target(state, rng))
            } else {
                (id, target)
            }
        } else if u < params.goal_bias + params.random_walk {
            let id = rng.gen_range(0..tree.nodes.len());
            (id, tree.random_walk_target(&tree.nodes[id].state, rng))
        } else {
            let sample: Vec<Config> = (0..world.robots()).map(|_| uniform_config(bounds, rng)).collect();
            let id = tree.nearest(&sample);
            match oracle_expand(world, &tree.nodes[id].state, &sample) {
                Some(t) => (id, t),
                None => continue,
            }
        };
        let state = tree.nodes[from].state.clone();
        let Some(next) = tree.try_move(&state, &target) else { continue };
        let Some(id) = tree.insert(next, Some(from)) else { continue };
        if all_done(world, &tree.nodes[id].state) {
            return Ok(tree.path_to(id));
        }
        if rng.gen_bool(0.25) {
            if let Some(goal) = tree.rollout(id, 200, params.deadline) {
                return Ok(tree.path_to(goal));
            }
        }
    }
    Err(DrrtError::Timeout)
}

/// One body set moving linearly between two configurations at unit speed.
#[derive(Debug, Clone, Copy)]
pub struct Motion<'a> {
    pub bodies: &'a RigidBodies,
    pub from: Config,
    pub to: Config,
    pub length: f64,
}

impl Motion<'_> {
    pub fn moves(&self) -> bool {
        self.from != self.to
    }

    /// Bound on any body point's displacement over the whole motion.
    fn displacement(&self) -> f64 {
        (self.to.x - self.from.x).hypot(self.to.y - self.from.y)
            + angle_diff(self.from.theta, self.to.theta).abs() * self.bodies.lever()
    }

    /// Configuration at time `t`; the motion ends at `length`.
    pub fn at(&self, t: f64) -> Config {
        if !self.moves() || self.length <= 0.0 {
            return self.to;
        }
        interpolate(self.from, self.to, (t / self.length).min(1.0))
    }
}

/// What blocked a set of simultaneous motions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conflict {
    /// Two motions (indices, ascending) come within the margin.
    Pair(usize, usize),
    /// A moving body comes within the margin of a static obstacle.
    Static(usize),
}

/// Simultaneous motions sampled in time so that no body point travels more
/// than `step / 2` between samples. Pairs where at least one side moves are
/// checked against each other; moving bodies are checked against `statics`.
pub fn first_conflict(motions: &[Motion], statics: &[Placed], step: f64, margin: f64) -> Option<Conflict> {
    let duration = motions.iter().map(|m| m.length).fold(0.0, f64::max);
    let rate = motions
        .iter()
        .filter(|m| m.moves() && m.length > 0.0)
        .map(|m| m.displacement() / m.length)
        .fold(0.0, f64::max);
    let samples = ((rate * duration) / (0.5 * step)).ceil().max(1.0) as usize;
    for j in 0..=samples {
        let t = duration * j as f64 / samples as f64;
        let placed: Vec<Vec<Placed>> = motions.iter().map(|m| m.bodies.placed_at(m.at(t))).collect();
        for a in 0..motions.len() {
            if motions[a].moves()
                && placed[a].iter().any(|p| statics.iter().any(|s| p.near(s, margin)))
            {
                return Some(Conflict::Static(a));
            }
            for b in a + 1..motions.len() {
                if !(motions[a].moves() || motions[b].moves()) {
                    continue;
                }
                if placed[a].iter().any(|p| placed[b].iter().any(|q| p.near(q, margin))) {
                    return Some(Conflict::Pair(a, b));
                }
            }
        }
    }
    None
}

pub fn motions_clear(motions: &[Motion], statics: &[Placed], step: f64, margin: f64) -> bool {
    first_conflict(motions, statics, step, margin).is_none()
}

/// Disc robots on plain roadmaps without gates or movables.
pub struct DiscFleet {
    pub bodies: Vec<RigidBodies>,
    pub roadmaps: Vec<Roadmap>,
    pub bounds: Bounds,
    pub step: f64,
    pub margin: f64,
    pub rotation_weight: f64,
}

impl CompositeWorld for DiscFleet {
    fn robots(&self) -> usize {
        self.roadmaps.len()
    }

    fn legs(&self, _: usize) -> usize {
        1
    }

    fn roadmap(&self, r: usize, _: usize) -> &Roadmap {
        &self.roadmaps[r]
    }

    fn home(&self, r: usize) -> Config {
        self.roadmaps[r].vertices[self.roadmaps[r].start]
    }

    fn gate_open(&self, _: usize, _: usize, _: &[LegState]) -> bool {
        true
    }

    fn edge_valid(&self, from: &[LegState], to: &[LegState]) -> bool {
        let motions: Vec<Motion> = (0..self.robots())
            .map(|r| {
                let length = if from[r] == to[r] {
                    0.0
                } else if from[r].0 != to[r].0 || from[r].0 >= self.legs(r) {
                    return None;
                } else {
                    self.roadmaps[r].edge_length(from[r].1, to[r].1)?
                };
                Some(Motion {
                    bodies: &self.bodies[r],
                    from: self.config(r, from[r]),
                    to: self.config(r, to[r]),
                    length,
                })
            })
            .collect::<Option<_>>()
            .unwrap_or_default();
        motions.len() == self.robots() && motions_clear(&motions, &[], self.step, self.margin)
    }

    fn bounds(&self) -> Bounds {
        self.bounds
    }

    fn rotation_weight(&self) -> f64 {
        self.rotation_weight
    }
}
