//! Phase-based baseline: in each phase every enabled robot runs one whole
//! action while the others idle, and all of them leave and arrive together.

use std::collections::{BTreeMap, BTreeSet};

use super::solution::Waypoint;
use crate::deadline::Deadline;
use crate::drrt::{first_conflict, Conflict, Motion};
use crate::geom::{config_distance, interpolate, Config, Pose2, RigidBodies};
use crate::placement::PlacementSolution;
use crate::prm::{carried_bodies, IndividualPlan};
use crate::scene::{MovableId, RobotId, Scenario};
use crate::task::{ActionKind, OrderingSet, TaskPlan};
use crate::transit::TransitionSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncError {
    /// No enabled robot can move without a conflict. Holds the last action
    /// completed by the robot in the way, if it has one.
    Deadlock(Option<usize>),
    Timeout,
}

struct Timeline {
    configs: Vec<Config>,
    /// Arrival time at each configuration.
    times: Vec<f64>,
}

impl Timeline {
    fn at(&self, t: f64) -> Config {
        let n = self.times.len();
        if t >= self.times[n - 1] {
            return self.configs[n - 1];
        }
        let k = self.times.partition_point(|&x| x <= t).max(1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = if t1 > t0 { (t - t0) / (t1 - t0) } else { 1.0 };
        interpolate(self.configs[k - 1], self.configs[k], s)
    }

    fn end(&self) -> f64 {
        *self.times.last().expect("timeline is non-empty")
    }
}

fn timeline(configs: Vec<Config>, rotation_weight: f64) -> Timeline {
    let mut times = vec![0.0];
    for w in configs.windows(2) {
        let t = times.last().unwrap() + config_distance(w[0], w[1], rotation_weight);
        times.push(t);
    }
    Timeline { configs, times }
}

#[allow(clippy::too_many_arguments)]
pub fn execute_synchronous(
    scene: &Scenario,
    plan: &TaskPlan,
    induced: &OrderingSet,
    placements: &PlacementSolution,
    transitions: &TransitionSolution,
    individual: &IndividualPlan,
    step: f64,
    margin: f64,
    rotation_weight: f64,
    deadline: Deadline,
) -> Result<Vec<Waypoint>, SyncError> {
    let robots: Vec<RobotId> = scene.robots.iter().map(|r| r.id).collect();
    let preds: Vec<Vec<usize>> = (0..plan.len()).map(|i| plan.predecessors(i, induced)).collect();
    let mut config: Vec<Config> = robots.iter().map(|r| scene.initial.robot_configs[r]).collect();
    let mut next = vec![0usize; robots.len()];
    let mut completed: BTreeSet<usize> = BTreeSet::new();
    let mut resting: BTreeMap<MovableId, Pose2> = scene.initial.movable_poses.clone();
    let mut holding: Vec<RigidBodies> = robots
        .iter()
        .map(|r| RigidBodies::single(scene.robot(*r).expect("robot").body.clone()))
        .collect();
    // A robot with no actions left drives to its home configuration.
    let park_paths: Vec<Option<Vec<Config>>> = robots
        .iter()
        .map(|r| {
            let rm = individual.park.get(r)?;
            let (p, _) = rm.shortest_path()?;
            Some(p.iter().map(|&v| rm.vertices[v]).collect())
        })
        .collect();
    let mut parked = vec![false; robots.len()];
    let mut path = vec![Waypoint {
        configs: robots.iter().copied().zip(config.iter().copied()).collect(),
        fired: Vec::new(),
    }];

    while completed.len() < plan.len() {
        if deadline.expired() {
            return Err(SyncError::Timeout);
        }
        let cur: Vec<Option<usize>> = (0..robots.len())
            .map(|ri| plan.robot_actions(robots[ri]).get(next[ri]).copied())
            .collect();
        let mut participating: Vec<usize> = (0..robots.len())
            .filter(|&ri| match cur[ri] {
                Some(i) => preds[i].iter().all(|p| completed.contains(p)),
                None => !parked[ri] && park_paths[ri].is_some(),
            })
            .collect();
        let statics: Vec<_> = resting
            .iter()
            .map(|(m, p)| scene.movable(*m).expect("movable").body.place(*p))
            .collect();

        let mut blocker: Option<usize> = None;
        let timelines = loop {
            if participating.is_empty() {
                let last = blocker.and_then(|ri| next[ri].checked_sub(1).map(|k| plan.robot_actions(robots[ri])[k]));
                return Err(SyncError::Deadlock(last));
            }
            let mut timelines: Vec<Option<Timeline>> = (0..robots.len()).map(|_| None).collect();
            let mut bodies: Vec<RigidBodies> = holding.clone();
            for &ri in &participating {
                let Some(i) = cur[ri] else {
                    let configs = park_paths[ri].clone().expect("parking robot has a park path");
                    timelines[ri] = Some(timeline(configs, rotation_weight));
                    continue;
                };
                let a = plan.action(i);
                let ap = &individual.per_action[&a.id];
                let configs: Vec<Config> = ap.path.iter().map(|&v| ap.roadmap.vertices[v]).collect();
                timelines[ri] = Some(timeline(configs, rotation_weight));
                if a.kind == ActionKind::Transfer {
                    let robot = scene.robot(a.r).expect("robot");
                    let g = transitions.grasp_for(plan, i).expect("transfer grasp");
                    bodies[ri] = carried_bodies(robot, Some((scene.movable(a.m).expect("movable"), g)));
                }
            }
            let mut breaks: Vec<f64> = timelines.iter().flatten().flat_map(|t| t.times.iter().copied()).collect();
            breaks.sort_by(f64::total_cmp);
            breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

            let pos = |ri: usize, t: f64| timelines[ri].as_ref().map_or(config[ri], |tl| tl.at(t));
            let mut conflict = None;
            for w in breaks.windows(2) {
                let motions: Vec<Motion> = (0..robots.len())
                    .map(|ri| {
                        let (from, to) = (pos(ri, w[0]), pos(ri, w[1]));
                        Motion {
                            bodies: &bodies[ri],
                            from,
                            to,
                            length: config_distance(from, to, rotation_weight),
                        }
                    })
                    .collect();
                if let Some(c) = first_conflict(&motions, &statics, step, margin) {
                    conflict = Some(c);
                    break;
                }
            }
            if let Some(c) = conflict {
                log::debug!("sync phase conflict {c:?} among {participating:?}");
            }
            match conflict {
                None => break timelines,
                Some(Conflict::Static(a)) => {
                    blocker = None;
                    participating.retain(|&r| r != a);
                }
                Some(Conflict::Pair(a, b)) => {
                    // The lower-indexed participant idles; a non-participant never moves.
                    let idle = if participating.contains(&a) { a } else { b };
                    blocker = Some(if idle == a { b } else { a });
                    participating.retain(|&r| r != idle);
                }
            }
        };

        let mut breaks: Vec<f64> = timelines.iter().flatten().flat_map(|t| t.times.iter().copied()).collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let end = timelines.iter().flatten().map(Timeline::end).fold(0.0, f64::max);
        for &t in breaks.iter().skip(1) {
            let configs = (0..robots.len())
                .map(|ri| (robots[ri], timelines[ri].as_ref().map_or(config[ri], |tl| tl.at(t))))
                .collect();
            path.push(Waypoint { configs, fired: Vec::new() });
        }
        if end <= 0.0 || breaks.len() < 2 {
            let configs = robots.iter().copied().zip(config.iter().copied()).collect();
            path.push(Waypoint { configs, fired: Vec::new() });
        }
        let last = path.last_mut().expect("phase produced a waypoint");
        for &ri in &participating {
            let tl = timelines[ri].as_ref().expect("participant timeline");
            config[ri] = tl.configs[tl.configs.len() - 1];
            last.configs.insert(robots[ri], config[ri]);
            let Some(i) = cur[ri] else {
                parked[ri] = true;
                continue;
            };
            let a = plan.action(i);
            last.fired.push(a.id.clone());
            match a.kind {
                ActionKind::Transit => {
                    resting.remove(&a.m);
                    let g = transitions.grasp_for(plan, i).expect("transit grasp");
                    let robot = scene.robot(a.r).expect("robot");
                    holding[ri] = carried_bodies(robot, Some((scene.movable(a.m).expect("movable"), g)));
                }
                ActionKind::Transfer => {
                    resting.insert(a.m, placements.pose_of[&a.id]);
                    holding[ri] = RigidBodies::single(scene.robot(a.r).expect("robot").body.clone());
                }
            }
            completed.insert(i);
            next[ri] += 1;
        }
        last.fired.sort();
    }
    Ok(path)
}
