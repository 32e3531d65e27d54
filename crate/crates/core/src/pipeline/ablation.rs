//! Candidate filters that fold later steps into the placement search.

use crate::deadline::Deadline;
use crate::geom::{Placed, Pose2, RigidBodies};
use crate::placement::CandidateFilter;
use crate::prm::{build_roadmap, carried_bodies, PrmParams};
use crate::rng::labeled_rng;
use crate::scene::Scenario;
use crate::task::TaskPlan;
use crate::transit::{sample_grasps, solve_kin};

/// For every placement candidate, samples grasps and solves the place
/// configuration of each; with `roadmaps` it also builds a roadmap from the
/// robot's initial configuration to every feasible place configuration. The
/// whole joint domain of a candidate is evaluated before it is accepted.
pub struct MergedFilter<'a> {
    scene: &'a Scenario,
    fixed: Vec<Placed>,
    n_grasp: usize,
    clearance: f64,
    seed: u64,
    roadmaps: Option<PrmParams>,
    deadline: Deadline,
    pub evaluations: usize,
}

impl<'a> MergedFilter<'a> {
    pub fn new(
        scene: &'a Scenario,
        n_grasp: usize,
        clearance: f64,
        seed: u64,
        roadmaps: Option<PrmParams>,
        deadline: Deadline,
    ) -> Self {
        MergedFilter {
            scene,
            fixed: scene.fixed_placed(),
            n_grasp,
            clearance,
            seed,
            roadmaps,
            deadline,
            evaluations: 0,
        }
    }
}

impl CandidateFilter for MergedFilter<'_> {
    fn accept(&mut self, plan: &TaskPlan, action: usize, pose: Pose2) -> bool {
        self.evaluations += 1;
        let a = plan.action(action);
        let robot = self.scene.robot(a.r).expect("validated robot");
        let movable = self.scene.movable(a.m).expect("validated movable");
        let label = format!("merge/{}/{}", a.id, self.evaluations);
        let mut rng = labeled_rng(self.seed, &label);
        let body = RigidBodies::single(robot.body.clone());
        let mut feasible = 0;
        for g in sample_grasps(robot, movable, &mut rng, self.n_grasp.max(1), self.clearance) {
            if self.deadline.expired() {
                return false;
            }
            let q = solve_kin(&g, pose);
            if body.hits_at(q, &self.fixed, self.clearance) {
                continue;
            }
            let Some(prm) = self.roadmaps else {
                feasible += 1;
                continue;
            };
            let start = self.scene.initial.robot_configs[&a.r];
            let carried = carried_bodies(robot, Some((movable, &g)));
            let bodies = if carried.hits_at(start, &self.fixed, self.clearance) { body.clone() } else { carried };
            if build_roadmap(&bodies, start, q, &self.fixed, self.scene.bounds(), &prm, &mut rng, self.deadline).is_ok() {
                feasible += 1;
            }
        }
        feasible > 0
    }
}
