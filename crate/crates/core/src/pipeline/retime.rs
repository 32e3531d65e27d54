//! Retiming of a composite path: each robot starts its next move as soon as
//! it is free and its gate is open, instead of waiting for the slowest robot
//! of the composite step. Moves whose early start causes a conflict are held
//! back to the end of the previous composite step; once every move is held
//! back the schedule equals the lockstep one.

use std::collections::BTreeSet;

use super::solution::Waypoint;
use super::world::PlanWorld;
use crate::drrt::{first_conflict, CompositePath, CompositeWorld, Conflict, Motion};
use crate::geom::{config_distance, interpolate, Config, RigidBodies};
use crate::task::TaskPlan;

struct Move<'w> {
    robot: usize,
    /// Composite step index, starting at 1.
    step: usize,
    bodies: &'w RigidBodies,
    from: Config,
    to: Config,
    length: f64,
    /// Actions completed on arrival.
    fires: Vec<usize>,
}

struct Schedule {
    start: Vec<f64>,
    end: Vec<f64>,
    fire_time: Vec<f64>,
}

fn extract<'w>(world: &'w PlanWorld, plan: &TaskPlan, path: &CompositePath) -> Vec<Move<'w>> {
    let w = world.rotation_weight();
    let mut moves = Vec::new();
    for (k, pair) in path.states.windows(2).enumerate() {
        let (from, to) = (&pair[0], &pair[1]);
        for r in 0..world.robots() {
            if from[r] == to[r] {
                continue;
            }
            let (a, b) = (world.config(r, from[r]), world.config(r, to[r]));
            let fires = (0..plan.len())
                .filter(|&i| world.completed(i, to) && !world.completed(i, from))
                .filter(|&i| plan.action(i).r == world.robot_ids[r])
                .collect();
            moves.push(Move {
                robot: r,
                step: k + 1,
                bodies: world.bodies(r, from[r]),
                from: a,
                to: b,
                length: config_distance(a, b, w),
                fires,
            });
        }
    }
    moves
}

fn schedule(world: &PlanWorld, plan: &TaskPlan, moves: &[Move], held: &[bool], steps: usize) -> Schedule {
    let mut start = vec![0.0; moves.len()];
    let mut end = vec![0.0; moves.len()];
    let mut fire_time = vec![0.0; plan.len()];
    let mut free_at = vec![0.0f64; world.robots()];
    // Latest move end over all moves of steps up to k.
    let mut step_end = vec![0.0f64; steps + 1];
    let mut idx = 0;
    for k in 1..=steps {
        step_end[k] = step_end[k - 1];
        while idx < moves.len() && moves[idx].step == k {
            let m = &moves[idx];
            let mut t = free_at[m.robot];
            for &i in &m.fires {
                for &p in world.preds(i) {
                    t = t.max(fire_time[p]);
                }
            }
            if held[idx] {
                t = t.max(step_end[k - 1]);
            }
            start[idx] = t;
            end[idx] = t + m.length;
            free_at[m.robot] = end[idx];
            for &i in &m.fires {
                fire_time[i] = end[idx];
            }
            step_end[k] = step_end[k].max(end[idx]);
            idx += 1;
        }
    }
    Schedule { start, end, fire_time }
}

fn breakpoints(s: &Schedule) -> Vec<f64> {
    let mut t: Vec<f64> = s.start.iter().chain(&s.end).copied().collect();
    t.push(0.0);
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// Per robot: the active move index at `t` (if any) and the configuration.
fn robot_at(world: &PlanWorld, moves: &[Move], s: &Schedule, per_robot: &[Vec<usize>], r: usize, t: f64) -> (Option<usize>, Config) {
    let list = &per_robot[r];
    // Last move that started at or before t.
    let k = list.partition_point(|&j| s.start[j] <= t);
    if k == 0 {
        return (None, world.home(r));
    }
    let j = list[k - 1];
    let m = &moves[j];
    if t >= s.end[j] {
        return (None, m.to);
    }
    let frac = if m.length > 0.0 { (t - s.start[j]) / m.length } else { 1.0 };
    (Some(j), interpolate(m.from, m.to, frac))
}

/// Bodies a robot carries while waiting after move `last` (or initially).
fn resting_bodies<'w>(world: &'w PlanWorld, path: &CompositePath, moves: &[Move<'w>], last: Option<usize>, r: usize) -> &'w RigidBodies {
    match last {
        None => world.bodies(r, path.states[0][r]),
        Some(j) => world.bodies(r, path.states[moves[j].step][r]),
    }
}

/// Returns moves involved in the first conflict, or None when the schedule is clear.
fn check(world: &PlanWorld, path: &CompositePath, moves: &[Move], s: &Schedule, step: f64, margin: f64) -> Option<Vec<usize>> {
    let n = world.robots();
    let mut per_robot = vec![Vec::new(); n];
    for (j, m) in moves.iter().enumerate() {
        per_robot[m.robot].push(j);
    }
    let times = breakpoints(s);
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mid = 0.5 * (t0 + t1);
        let mut active = vec![None; n];
        let mut motions = Vec::with_capacity(n);
        for r in 0..n {
            let (j, _) = robot_at(world, moves, s, &per_robot, r, mid);
            active[r] = j;
            let (_, from) = robot_at(world, moves, s, &per_robot, r, t0);
            let (to, bodies) = match j {
                Some(j) => {
                    let m = &moves[j];
                    let frac = if m.length > 0.0 { (t1 - s.start[j]) / m.length } else { 1.0 };
                    (interpolate(m.from, m.to, frac.min(1.0)), m.bodies)
                }
                None => {
                    let list = &per_robot[r];
                    let k = list.partition_point(|&x| s.end[x] <= t0);
                    (from, resting_bodies(world, path, moves, k.checked_sub(1).map(|k| list[k]), r))
                }
            };
            let from = if j.is_some() { from } else { to };
            motions.push(Motion {
                bodies,
                from,
                to,
                length: if j.is_some() { t1 - t0 } else { 0.0 },
            });
        }
        let statics = world.statics_with(|i| s.fire_time[i] <= t0);
        if let Some(c) = first_conflict(&motions, &statics, step, margin) {
            let robots = match c {
                Conflict::Pair(a, b) => vec![a, b],
                Conflict::Static(a) => vec![a],
            };
            log::debug!("retime: {c:?} in [{t0:.3}, {t1:.3}], active {active:?}");
            // A waiting robot got there early: hold back the move that brought it.
            let involved = robots
                .into_iter()
                .filter_map(|r| {
                    active[r].or_else(|| {
                        let list = &per_robot[r];
                        let k = list.partition_point(|&x| s.end[x] <= t0);
                        k.checked_sub(1).map(|k| list[k])
                    })
                })
                .collect();
            return Some(involved);
        }
    }
    None
}

/// Retimed waypoints for `path`, or None when no held-back set clears every
/// conflict (the caller then keeps the lockstep waypoints).
pub fn retime(world: &PlanWorld, plan: &TaskPlan, path: &CompositePath, step: f64, margin: f64) -> Option<Vec<Waypoint>> {
    let moves = extract(world, plan, path);
    let steps = path.states.len().saturating_sub(1);
    let mut held = vec![false; moves.len()];
    let s = loop {
        let s = schedule(world, plan, &moves, &held, steps);
        match check(world, path, &moves, &s, step, margin) {
            None => {
                log::debug!("retime: {} of {} moves held back", held.iter().filter(|&&h| h).count(), moves.len());
                break s;
            }
            Some(involved) => {
                let fresh: BTreeSet<usize> = involved.into_iter().filter(|&j| !held[j]).collect();
                if fresh.is_empty() {
                    log::debug!("retime: conflict among held-back moves");
                    if held.iter().all(|&h| h) {
                        return None;
                    }
                    // The conflict stems from earlier shifts; fall back to lockstep.
                    held.iter_mut().for_each(|h| *h = true);
                } else {
                    fresh.into_iter().for_each(|j| held[j] = true);
                }
            }
        }
    };

    let n = world.robots();
    let mut per_robot = vec![Vec::new(); n];
    for (j, m) in moves.iter().enumerate() {
        per_robot[m.robot].push(j);
    }
    let mut out = Vec::new();
    for &t in &breakpoints(&s) {
        let configs = (0..n)
            .map(|r| (world.robot_ids[r], robot_at(world, &moves, &s, &per_robot, r, t).1))
            .collect();
        let mut fired: Vec<_> = moves
            .iter()
            .enumerate()
            .filter(|&(j, _)| s.end[j] == t)
            .flat_map(|(_, m)| m.fires.iter().map(|&i| plan.action(i).id.clone()))
            .collect();
        fired.sort();
        out.push(Waypoint { configs, fired });
    }
    Some(out)
}
