//! The refinement problem seen as a composite world for the dRRT search.

use std::collections::BTreeMap;

use crate::drrt::{motions_clear, CompositeWorld, LegState, Motion};
use crate::geom::{Config, Placed, Pose2, RigidBodies};
use crate::placement::PlacementSolution;
use crate::prm::{carried_bodies, IndividualPlan, Roadmap};
use crate::scene::{Bounds, MovableId, RobotId, Scenario};
use crate::task::{ActionKind, OrderingSet, TaskPlan};
use crate::transit::TransitionSolution;

pub struct Leg<'a> {
    pub action: usize,
    pub roadmap: &'a Roadmap,
    pub bodies: RigidBodies,
}

pub struct PlanWorld<'a> {
    pub robot_ids: Vec<RobotId>,
    legs: Vec<Vec<Leg<'a>>>,
    park: Vec<Option<&'a Roadmap>>,
    idle: Vec<RigidBodies>,
    home: Vec<Config>,
    /// (robot index, leg index) of every action.
    loc: Vec<(usize, usize)>,
    preds: Vec<Vec<usize>>,
    chains: Vec<(MovableId, Pose2, Vec<usize>)>,
    movable_body: BTreeMap<MovableId, crate::geom::Shape>,
    place_pose: Vec<Option<Pose2>>,
    bounds: Bounds,
    step: f64,
    margin: f64,
    rotation_weight: f64,
}

impl<'a> PlanWorld<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        scene: &Scenario,
        plan: &TaskPlan,
        induced: &OrderingSet,
        placements: &PlacementSolution,
        transitions: &TransitionSolution,
        individual: &'a IndividualPlan,
        step: f64,
        margin: f64,
        rotation_weight: f64,
    ) -> Self {
        let robot_ids: Vec<RobotId> = scene.robots.iter().map(|r| r.id).collect();
        let mut legs = Vec::new();
        let mut loc = vec![(0, 0); plan.len()];
        for (ri, &r) in robot_ids.iter().enumerate() {
            let robot_spec = scene.robot(r).expect("robot listed");
            let mut list = Vec::new();
            for (li, &i) in plan.robot_actions(r).iter().enumerate() {
                let a = plan.action(i);
                let held = match a.kind {
                    ActionKind::Transfer => {
                        let g = transitions.grasp_for(plan, i).expect("transfer has a grasp");
                        Some((scene.movable(a.m).expect("validated movable"), g))
                    }
                    ActionKind::Transit => None,
                };
                loc[i] = (ri, li);
                list.push(Leg {
                    action: i,
                    roadmap: &individual.per_action[&a.id].roadmap,
                    bodies: carried_bodies(robot_spec, held),
                });
            }
            legs.push(list);
        }
        let idle = robot_ids
            .iter()
            .map(|&r| RigidBodies::single(scene.robot(r).expect("robot listed").body.clone()))
            .collect();
        let home = robot_ids.iter().map(|r| scene.initial.robot_configs[r]).collect();
        let preds = (0..plan.len()).map(|i| plan.predecessors(i, induced)).collect();
        let reach = plan.reachability(induced);
        let chains = scene
            .movables
            .iter()
            .map(|m| {
                let members: Vec<usize> = (0..plan.len()).filter(|&i| plan.action(i).m == m.id).collect();
                let mut chain = members.clone();
                chain.sort_by_key(|&i| members.iter().filter(|&&j| reach.reaches(j, i)).count());
                (m.id, scene.initial.movable_poses[&m.id], chain)
            })
            .collect();
        let movable_body = scene.movables.iter().map(|m| (m.id, m.body.clone())).collect();
        let place_pose = (0..plan.len())
            .map(|i| placements.pose_of.get(&plan.action(i).id).copied())
            .collect();
        let park = robot_ids.iter().map(|r| individual.park.get(r)).collect();
        PlanWorld {
            robot_ids,
            legs,
            park,
            idle,
            home,
            loc,
            preds,
            chains,
            movable_body,
            place_pose,
            bounds: scene.bounds(),
            step,
            margin,
            rotation_weight,
        }
    }

    pub fn action_at(&self, r: usize, leg: usize) -> usize {
        self.legs[r][leg].action
    }

    /// Actions that must complete before `i` may.
    pub fn preds(&self, i: usize) -> &[usize] {
        &self.preds[i]
    }

    /// Movables with their resting pose when `done` says which actions have completed.
    pub fn statics_with(&self, done: impl Fn(usize) -> bool) -> Vec<Placed> {
        let mut out = Vec::new();
        for (m, initial, chain) in &self.chains {
            let last = chain.iter().rev().find(|&&i| done(i));
            let pose = match last {
                None => *initial,
                Some(&i) => match self.place_pose[i] {
                    Some(p) => p,
                    None => continue,
                },
            };
            out.push(self.movable_body[m].place(pose));
        }
        out
    }

    pub fn completed(&self, i: usize, state: &[LegState]) -> bool {
        let (r, leg) = self.loc[i];
        state[r].0 > leg
    }

    /// Movables resting in place in `state`.
    pub fn statics(&self, state: &[LegState]) -> Vec<Placed> {
        self.statics_with(|i| self.completed(i, state))
    }

    pub fn bodies(&self, r: usize, s: LegState) -> &RigidBodies {
        if s.0 < self.legs[r].len() {
            &self.legs[r][s.0].bodies
        } else {
            &self.idle[r]
        }
    }
}

impl CompositeWorld for PlanWorld<'_> {
    fn robots(&self) -> usize {
        self.robot_ids.len()
    }

    fn legs(&self, r: usize) -> usize {
        self.legs[r].len() + usize::from(self.park[r].is_some())
    }

    fn required_legs(&self, r: usize) -> usize {
        self.legs[r].len()
    }

    fn roadmap(&self, r: usize, leg: usize) -> &Roadmap {
        match self.legs[r].get(leg) {
            Some(l) => l.roadmap,
            None => self.park[r].expect("parking leg exists"),
        }
    }

    fn home(&self, r: usize) -> Config {
        self.home[r]
    }

    fn gate_open(&self, r: usize, leg: usize, state: &[LegState]) -> bool {
        let Some(l) = self.legs[r].get(leg) else { return true };
        let i = l.action;
        self.preds[i].iter().all(|&p| self.completed(p, state))
    }

    fn edge_valid(&self, from: &[LegState], to: &[LegState]) -> bool {
        let mut motions = Vec::with_capacity(from.len());
        for r in 0..from.len() {
            let length = if from[r] == to[r] {
                0.0
            } else {
                match self.roadmap(r, from[r].0).edge_length(from[r].1, to[r].1) {
                    Some(l) => l,
                    None => return false,
                }
            };
            motions.push(Motion {
                bodies: self.bodies(r, from[r]),
                from: self.config(r, from[r]),
                to: self.config(r, to[r]),
                length,
            });
        }
        motions_clear(&motions, &self.statics(from), self.step, self.margin)
    }

    fn bounds(&self) -> Bounds {
        self.bounds
    }

    fn rotation_weight(&self) -> f64 {
        self.rotation_weight
    }
}
