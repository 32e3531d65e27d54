//! Independent re-check of a solution against the task constraints.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;

use super::solution::Solution;
use crate::geom::{contains, Placed, Pose2};
use crate::scene::{MovableId, RobotId, Scenario};
use crate::task::{ActionId, ActionKind, Grasp, OrderingSet, TaskPlan};

const KIN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ViolationKind {
    Malformed,
    Contain,
    Grasp,
    Kin,
    Hold,
    Transition,
    Prec,
    CFree,
    Incomplete,
    Makespan,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}: {}", self.kind, self.location, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    fn push(&mut self, kind: ViolationKind, location: impl Into<String>, detail: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            location: location.into(),
            detail: detail.into(),
        });
    }
}

fn wrap(a: f64) -> f64 {
    let mut t = a % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

fn lerp(a: Pose2, b: Pose2, s: f64) -> Pose2 {
    Pose2::new(a.x + s * (b.x - a.x), a.y + s * (b.y - a.y), a.theta + s * wrap(b.theta - a.theta))
}

fn travel(a: Pose2, b: Pose2, w: f64) -> f64 {
    (b.x - a.x).hypot(b.y - a.y) + w * wrap(b.theta - a.theta).abs()
}

fn attach(q: Pose2, g: Pose2) -> Pose2 {
    let (s, c) = q.theta.sin_cos();
    Pose2::new(q.x + c * g.x - s * g.y, q.y + s * g.x + c * g.y, q.theta + g.theta)
}

fn same_pose(a: Pose2, b: Pose2, tol: f64) -> bool {
    (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol && wrap(a.theta - b.theta).abs() <= tol
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Entity {
    Robot(RobotId),
    Held(MovableId, RobotId),
    Resting(MovableId),
    Fixed(u32),
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Robot(r) => write!(f, "robot {r}"),
            Entity::Held(m, r) => write!(f, "movable {m} held by robot {r}"),
            Entity::Resting(m) => write!(f, "movable {m}"),
            Entity::Fixed(id) => write!(f, "fixed {id}"),
        }
    }
}

impl Entity {
    fn owner(&self) -> Option<RobotId> {
        match self {
            Entity::Robot(r) | Entity::Held(_, r) => Some(*r),
            _ => None,
        }
    }
}

struct World<'a> {
    scene: &'a Scenario,
    held: BTreeMap<RobotId, (MovableId, Grasp)>,
    resting: BTreeMap<MovableId, Pose2>,
}

impl World<'_> {
    fn lever(&self, r: RobotId) -> f64 {
        let robot = self.scene.robot(r).expect("robot exists").body.bounding_radius();
        match self.held.get(&r) {
            Some((m, g)) => {
                let body = self.scene.movable(*m).expect("movable exists").body.bounding_radius();
                robot.max(g.gamma.x.hypot(g.gamma.y) + body)
            }
            None => robot,
        }
    }

    fn bodies(&self, configs: &BTreeMap<RobotId, Pose2>) -> Vec<(Entity, Placed)> {
        let mut out = Vec::new();
        for (r, q) in configs {
            let robot = self.scene.robot(*r).expect("robot exists");
            out.push((Entity::Robot(*r), Placed::new(&robot.body, *q)));
            if let Some((m, g)) = self.held.get(r) {
                let body = &self.scene.movable(*m).expect("movable exists").body;
                out.push((Entity::Held(*m, *r), Placed::new(body, attach(*q, g.gamma))));
            }
        }
        for (m, p) in &self.resting {
            let body = &self.scene.movable(*m).expect("movable exists").body;
            out.push((Entity::Resting(*m), Placed::new(body, *p)));
        }
        for f in &self.scene.fixed {
            out.push((Entity::Fixed(f.id), Placed::new(&f.shape, f.pose)));
        }
        out
    }
}

fn colliding_pairs(bodies: &[(Entity, Placed)], out: &mut BTreeSet<(Entity, Entity)>) {
    for i in 0..bodies.len() {
        for j in i + 1..bodies.len() {
            let (a, b) = (&bodies[i], &bodies[j]);
            if matches!((a.0, b.0), (Entity::Fixed(_), Entity::Fixed(_))) {
                continue;
            }
            if a.0.owner().is_some() && a.0.owner() == b.0.owner() {
                continue;
            }
            if a.1.collides(&b.1) {
                out.insert((a.0.min(b.0), a.0.max(b.0)));
            }
        }
    }
}

/// Re-checks every constraint of `sol` with exact shapes and a sweep ten times
/// finer than the planner's resolution.
pub fn validate_solution(scene: &Scenario, plan: &TaskPlan, prec_final: &OrderingSet, sol: &Solution) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let asg = &sol.assignment;
    let w = sol.params.rotation_weight;
    let step = sol.params.step / 10.0;

    // Static assignment checks.
    for a in plan.actions() {
        match a.kind {
            ActionKind::Transfer => match asg.placements.get(&a.id) {
                None => rep.push(ViolationKind::Malformed, a.id.as_str(), "missing placement"),
                Some(p) => {
                    let region = scene.region(a.w2).expect("validated region");
                    let body = &scene.movable(a.m).expect("validated movable").body;
                    if !contains(&region.polygon, region.pose, body, *p) {
                        rep.push(ViolationKind::Contain, a.id.as_str(), format!("movable {} not inside region {}", a.m, a.w2));
                    }
                }
            },
            ActionKind::Transit => match asg.grasps.get(&a.id) {
                None => rep.push(ViolationKind::Malformed, a.id.as_str(), "missing grasp"),
                Some(g) => {
                    let robot = scene.robot(a.r).expect("validated robot");
                    let body = &scene.movable(a.m).expect("validated movable").body;
                    let d = g.gamma.x.hypot(g.gamma.y);
                    let contact = robot.body.bounding_radius() + body.bounding_radius();
                    if g.r != a.r || g.m != a.m {
                        rep.push(ViolationKind::Grasp, a.id.as_str(), format!("grasp is for robot {} and movable {}", g.r, g.m));
                    }
                    if d < contact - 1e-9 || d > robot.reach + 1e-9 {
                        rep.push(ViolationKind::Grasp, a.id.as_str(), format!("grasp distance {d:.6} outside [{contact:.6}, {:.6}]", robot.reach));
                    }
                }
            },
        }
        if !asg.configs.contains_key(&a.id) {
            rep.push(ViolationKind::Malformed, a.id.as_str(), "missing transition configuration");
        }
    }
    if rep.count(ViolationKind::Malformed) > 0 {
        return rep;
    }

    let Some(first) = sol.path.first() else {
        rep.push(ViolationKind::Malformed, "path", "empty path");
        return rep;
    };
    let robot_ids: BTreeSet<RobotId> = scene.robots.iter().map(|r| r.id).collect();
    for (k, wp) in sol.path.iter().enumerate() {
        if wp.configs.keys().copied().collect::<BTreeSet<_>>() != robot_ids {
            rep.push(ViolationKind::Malformed, format!("waypoint {k}"), "robot set differs from the scenario");
            return rep;
        }
    }
    for (r, q) in &first.configs {
        if !same_pose(*q, scene.initial.robot_configs[r], 1e-9) {
            rep.push(ViolationKind::Malformed, "waypoint 0", format!("robot {r} does not start at its initial configuration"));
        }
    }
    if !first.fired.is_empty() {
        rep.push(ViolationKind::Malformed, "waypoint 0", "transitions fired before any motion");
    }

    let mut world = World {
        scene,
        held: BTreeMap::new(),
        resting: scene.initial.movable_poses.clone(),
    };
    let mut fired_at: BTreeMap<ActionId, usize> = BTreeMap::new();
    let mut next_of: BTreeMap<RobotId, usize> = BTreeMap::new();
    let mut active: BTreeSet<(Entity, Entity)> = BTreeSet::new();
    colliding_pairs(&world.bodies(&first.configs), &mut active);
    for (a, b) in &active {
        rep.push(ViolationKind::CFree, "waypoint 0", format!("{a} overlaps {b}"));
    }

    for k in 1..sol.path.len() {
        let (p, c) = (&sol.path[k - 1], &sol.path[k]);
        let lengths: BTreeMap<RobotId, f64> = p.configs.iter().map(|(r, q)| (*r, travel(*q, c.configs[r], w))).collect();
        let duration = lengths.values().copied().fold(0.0, f64::max);
        let rate = p
            .configs
            .iter()
            .filter(|(r, _)| lengths[r] > 0.0)
            .map(|(r, q)| {
                let to = c.configs[r];
                ((to.x - q.x).hypot(to.y - q.y) + world.lever(*r) * wrap(to.theta - q.theta).abs()) / lengths[r]
            })
            .fold(0.0, f64::max);
        let samples = ((rate * duration) / step).ceil().max(1.0) as usize;
        let mut now = BTreeSet::new();
        for j in 0..=samples {
            let t = duration * j as f64 / samples as f64;
            let configs: BTreeMap<RobotId, Pose2> = p
                .configs
                .iter()
                .map(|(r, q)| {
                    let len = lengths[r];
                    let s = if len > 0.0 { (t / len).min(1.0) } else { 1.0 };
                    (*r, lerp(*q, c.configs[r], s))
                })
                .collect();
            colliding_pairs(&world.bodies(&configs), &mut now);
        }
        for (a, b) in now.difference(&active) {
            rep.push(ViolationKind::CFree, format!("step {} -> {}", k - 1, k), format!("{a} overlaps {b}"));
        }
        active = now;

        for id in &c.fired {
            let loc = format!("waypoint {k}");
            let Some(i) = plan.index_of(id) else {
                rep.push(ViolationKind::Malformed, loc, format!("unknown action {id}"));
                continue;
            };
            if fired_at.insert(id.clone(), k).is_some() {
                rep.push(ViolationKind::Malformed, loc, format!("{id} fired twice"));
                continue;
            }
            let a = plan.action(i);
            let expected = plan.robot_actions(a.r).get(*next_of.get(&a.r).unwrap_or(&0)).copied();
            if expected != Some(i) {
                rep.push(ViolationKind::Prec, loc.clone(), format!("{id} fired out of robot {} order", a.r));
            }
            *next_of.entry(a.r).or_default() += 1;
            let q_plan = asg.configs[id];
            if !same_pose(c.configs[&a.r], q_plan, KIN_TOL) {
                rep.push(ViolationKind::Transition, loc.clone(), format!("robot {} is not at the transition configuration of {id}", a.r));
            }
            match a.kind {
                ActionKind::Transit => {
                    let g = asg.grasps[id];
                    if world.held.contains_key(&a.r) {
                        rep.push(ViolationKind::Hold, loc.clone(), format!("robot {} grasps while already holding", a.r));
                    }
                    if let Some((r, _)) = world.held.iter().find(|(_, (m, _))| *m == a.m) {
                        rep.push(ViolationKind::Hold, loc.clone(), format!("movable {} already held by robot {r}", a.m));
                    }
                    match world.resting.remove(&a.m) {
                        Some(pose) => {
                            if !same_pose(attach(q_plan, g.gamma), pose, KIN_TOL) {
                                rep.push(ViolationKind::Kin, loc.clone(), format!("grasp of {id} does not reach movable {}", a.m));
                            }
                        }
                        None => rep.push(ViolationKind::Hold, loc.clone(), format!("movable {} is not resting", a.m)),
                    }
                    world.held.insert(a.r, (a.m, g));
                }
                ActionKind::Transfer => {
                    let target = asg.placements[id];
                    match world.held.get(&a.r) {
                        Some((m, g)) if *m == a.m => {
                            if !same_pose(attach(q_plan, g.gamma), target, KIN_TOL) {
                                rep.push(ViolationKind::Kin, loc.clone(), format!("grasp of {id} does not match its placement"));
                            }
                        }
                        _ => rep.push(ViolationKind::Hold, loc.clone(), format!("robot {} does not hold movable {}", a.r, a.m)),
                    }
                    world.held.remove(&a.r);
                    world.resting.insert(a.m, target);
                }
            }
        }
    }

    for a in plan.actions() {
        if !fired_at.contains_key(&a.id) {
            rep.push(ViolationKind::Incomplete, a.id.as_str(), "never fired");
        }
    }
    for (a, b) in prec_final.edges() {
        if let (Some(ka), Some(kb)) = (fired_at.get(a), fired_at.get(b)) {
            if ka >= kb {
                rep.push(ViolationKind::Prec, format!("{a} < {b}"), format!("fired at waypoints {ka} and {kb}"));
            }
        }
    }
    let recomputed: f64 = sol
        .path
        .windows(2)
        .map(|s| s[0].configs.iter().map(|(r, q)| travel(*q, s[1].configs[r], w)).fold(0.0, f64::max))
        .sum();
    if (recomputed - sol.makespan).abs() > 1e-6 * recomputed.max(1.0) {
        rep.push(ViolationKind::Makespan, "makespan", format!("reported {} but path gives {}", sol.makespan, recomputed));
    }
    rep
}
