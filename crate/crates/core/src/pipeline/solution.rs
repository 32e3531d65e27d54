use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PipelineParams;
use crate::geom::{config_distance, Config, Pose2};
use crate::placement::PlacementSolution;
use crate::scene::RobotId;
use crate::task::{ActionId, Grasp};
use crate::transit::TransitionSolution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assignment {
    /// Placement pose per transfer.
    pub placements: BTreeMap<ActionId, Pose2>,
    /// Grasp per transit, shared with its transfer.
    pub grasps: BTreeMap<ActionId, Grasp>,
    /// Transition configuration per action.
    pub configs: BTreeMap<ActionId, Config>,
}

impl Assignment {
    pub fn from_steps(placements: &PlacementSolution, transitions: &TransitionSolution) -> Self {
        Assignment {
            placements: placements.pose_of.clone(),
            grasps: transitions.grasp_of.clone(),
            configs: transitions.config_of.clone(),
        }
    }
}

/// Joint configuration after one composite step, with the transitions fired
/// on arrival.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub configs: BTreeMap<RobotId, Config>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fired: Vec<ActionId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solution {
    pub params: PipelineParams,
    pub assignment: Assignment,
    pub induced: Vec<[ActionId; 2]>,
    /// Starts at the initial configuration; robots move linearly at unit
    /// speed between waypoints and wait once they arrive.
    pub path: Vec<Waypoint>,
    pub makespan: f64,
}

impl Solution {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solution serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Sum over consecutive waypoints of the longest individual move.
pub fn path_makespan(path: &[Waypoint], rotation_weight: f64) -> f64 {
    path.windows(2)
        .map(|w| {
            w[1].configs
                .iter()
                .map(|(r, q)| w[0].configs.get(r).map_or(0.0, |p| config_distance(*p, *q, rotation_weight)))
                .fold(0.0, f64::max)
        })
        .sum()
}
