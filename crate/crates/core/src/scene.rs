//! Scenario data model, file loading and initial-state validation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{contains, compose, Config, Placed, Pose2, Shape};
use crate::task::Grasp;

pub type RobotId = u32;
pub type MovableId = u32;
pub type RegionId = u32;
pub type FixedId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {invariant} ({})", ids.join(", "))]
    Validation { invariant: String, ids: Vec<String> },
}

impl ScenarioError {
    fn invalid(invariant: impl Into<String>, ids: Vec<String>) -> Self {
        ScenarioError::Validation {
            invariant: invariant.into(),
            ids,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub id: RobotId,
    pub body: Shape,
    /// Maximum grasp offset length.
    pub reach: f64,
}

impl RobotSpec {
    pub fn radius(&self) -> f64 {
        self.body.bounding_radius()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovableSpec {
    pub id: MovableId,
    pub body: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedSpec {
    pub id: FixedId,
    pub shape: Shape,
    pub pose: Pose2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub id: RegionId,
    pub polygon: Shape,
    pub pose: Pose2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub robot_configs: BTreeMap<RobotId, Config>,
    pub movable_poses: BTreeMap<MovableId, Pose2>,
    /// Declared region of each movable; cross-checked against geometry.
    pub movable_regions: BTreeMap<MovableId, RegionId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub robots: Vec<RobotSpec>,
    pub movables: Vec<MovableSpec>,
    pub fixed: Vec<FixedSpec>,
    pub regions: Vec<RegionSpec>,
    pub initial: InitialState,
}

/// Axis-aligned workspace bounds used for sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds {
    fn empty() -> Self {
        Bounds {
            min: [f64::INFINITY; 2],
            max: [f64::NEG_INFINITY; 2],
        }
    }

    fn include(&mut self, p: [f64; 2], pad: f64) {
        for k in 0..2 {
            self.min[k] = self.min[k].min(p[k] - pad);
            self.max[k] = self.max[k].max(p[k] + pad);
        }
    }

    fn include_shape(&mut self, s: &Shape, pose: Pose2) {
        match s {
            Shape::Disc(r) => self.include([pose.x, pose.y], *r),
            Shape::Poly(v) => v.iter().for_each(|p| self.include(pose.transform_point(*p), 0.0)),
        }
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }
}

pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scene: Scenario =
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    scene.validate()?;
    Ok(scene)
}

fn unique_ids<I: IntoIterator<Item = u32>>(kind: &str, ids: I) -> Result<(), ScenarioError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if id == 0 {
            return Err(ScenarioError::invalid(
                format!("{kind} ids start at 1"),
                vec![format!("{kind} 0")],
            ));
        }
        if !seen.insert(id) {
            return Err(ScenarioError::invalid(
                format!("duplicate {kind} id"),
                vec![format!("{kind} {id}")],
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
enum Entity {
    Robot(RobotId),
    Movable(MovableId),
    Fixed(FixedId),
}

impl Entity {
    fn label(&self) -> String {
        match self {
            Entity::Robot(i) => format!("robot {i}"),
            Entity::Movable(i) => format!("movable {i}"),
            Entity::Fixed(i) => format!("fixed {i}"),
        }
    }
}

impl Scenario {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn robot(&self, id: RobotId) -> Option<&RobotSpec> {
        self.robots.iter().find(|r| r.id == id)
    }

    pub fn movable(&self, id: MovableId) -> Option<&MovableSpec> {
        self.movables.iter().find(|m| m.id == id)
    }

    pub fn region(&self, id: RegionId) -> Option<&RegionSpec> {
        self.regions.iter().find(|w| w.id == id)
    }

    pub fn fixed_placed(&self) -> Vec<Placed> {
        self.fixed.iter().map(|f| f.shape.place(f.pose)).collect()
    }

    /// Bounding box of fixed shapes, regions and the initial state.
    pub fn bounds(&self) -> Bounds {
        let mut b = Bounds::empty();
        for f in &self.fixed {
            b.include_shape(&f.shape, f.pose);
        }
        for w in &self.regions {
            b.include_shape(&w.polygon, w.pose);
        }
        for r in &self.robots {
            if let Some(q) = self.initial.robot_configs.get(&r.id) {
                b.include_shape(&r.body, *q);
            }
        }
        for m in &self.movables {
            if let Some(p) = self.initial.movable_poses.get(&m.id) {
                b.include_shape(&m.body, *p);
            }
        }
        b
    }

    /// Regions whose polygon fully contains `body` at `pose`.
    pub fn regions_containing(&self, body: &Shape, pose: Pose2) -> Vec<RegionId> {
        self.regions
            .iter()
            .filter(|w| contains(&w.polygon, w.pose, body, pose))
            .map(|w| w.id)
            .collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        unique_ids("robot", self.robots.iter().map(|r| r.id))?;
        unique_ids("movable", self.movables.iter().map(|m| m.id))?;
        unique_ids("fixed", self.fixed.iter().map(|f| f.id))?;
        unique_ids("region", self.regions.iter().map(|w| w.id))?;

        for r in &self.robots {
            let label = vec![format!("robot {}", r.id)];
            if !matches!(r.body, Shape::Disc(_)) {
                return Err(ScenarioError::invalid("robot body must be a disc", label));
            }
            r.body
                .validate()
                .map_err(|e| ScenarioError::invalid(e.to_string(), label.clone()))?;
            if !(r.reach > 0.0 && r.reach.is_finite()) {
                return Err(ScenarioError::invalid("robot reach must be positive", label));
            }
        }
        for m in &self.movables {
            m.body
                .validate()
                .map_err(|e| ScenarioError::invalid(e.to_string(), vec![format!("movable {}", m.id)]))?;
        }
        for f in &self.fixed {
            f.shape
                .validate()
                .map_err(|e| ScenarioError::invalid(e.to_string(), vec![format!("fixed {}", f.id)]))?;
        }
        for w in &self.regions {
            let label = vec![format!("region {}", w.id)];
            if !matches!(w.polygon, Shape::Poly(_)) {
                return Err(ScenarioError::invalid("region must be a convex polygon", label));
            }
            w.polygon
                .validate()
                .map_err(|e| ScenarioError::invalid(e.to_string(), label.clone()))?;
        }

        let init = &self.initial;
        for r in &self.robots {
            if !init.robot_configs.contains_key(&r.id) {
                return Err(ScenarioError::invalid(
                    "missing initial robot config",
                    vec![format!("robot {}", r.id)],
                ));
            }
        }
        for id in init.robot_configs.keys() {
            if self.robot(*id).is_none() {
                return Err(ScenarioError::invalid(
                    "initial config for unknown robot",
                    vec![format!("robot {id}")],
                ));
            }
        }
        for m in &self.movables {
            let label = vec![format!("movable {}", m.id)];
            let pose = init
                .movable_poses
                .get(&m.id)
                .ok_or_else(|| ScenarioError::invalid("missing initial movable pose", label.clone()))?;
            let declared = init
                .movable_regions
                .get(&m.id)
                .ok_or_else(|| ScenarioError::invalid("missing initial movable region", label.clone()))?;
            if self.region(*declared).is_none() {
                return Err(ScenarioError::invalid(
                    "initial region does not exist",
                    vec![format!("movable {}", m.id), format!("region {declared}")],
                ));
            }
            let inside = self.regions_containing(&m.body, *pose);
            if inside.len() != 1 || inside[0] != *declared {
                return Err(ScenarioError::invalid(
                    "initial movable pose must lie in exactly its declared region",
                    vec![format!("movable {}", m.id), format!("region {declared}")],
                ));
            }
        }
        for id in init.movable_poses.keys().chain(init.movable_regions.keys()) {
            if self.movable(*id).is_none() {
                return Err(ScenarioError::invalid(
                    "initial state names unknown movable",
                    vec![format!("movable {id}")],
                ));
            }
        }

        // Composite initial state must be collision-free.
        let mut bodies: Vec<(Entity, Placed)> = Vec::new();
        for r in &self.robots {
            bodies.push((Entity::Robot(r.id), r.body.place(init.robot_configs[&r.id])));
        }
        for m in &self.movables {
            bodies.push((Entity::Movable(m.id), m.body.place(init.movable_poses[&m.id])));
        }
        for f in &self.fixed {
            bodies.push((Entity::Fixed(f.id), f.shape.place(f.pose)));
        }
        for i in 0..bodies.len() {
            for j in (i + 1)..bodies.len() {
                if matches!((bodies[i].0, bodies[j].0), (Entity::Fixed(_), Entity::Fixed(_))) {
                    continue;
                }
                if bodies[i].1.collides(&bodies[j].1) {
                    return Err(ScenarioError::invalid(
                        "initial state is not collision-free",
                        vec![bodies[i].0.label(), bodies[j].0.label()],
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Pairwise collision-freedom of robots, held and unheld movables and fixed
/// shapes. A held movable is posed by its robot's configuration and grasp and
/// is never checked against its own robot.
pub fn in_free_space(
    scene: &Scenario,
    robot_configs: &BTreeMap<RobotId, Config>,
    movable_poses: &BTreeMap<MovableId, Pose2>,
    held: &BTreeMap<RobotId, (MovableId, Grasp)>,
) -> bool {
    // (owner robot, geometry); owner None for unheld movables and fixed.
    let mut bodies: Vec<(Option<RobotId>, bool, Placed)> = Vec::new();
    for r in &scene.robots {
        if let Some(q) = robot_configs.get(&r.id) {
            bodies.push((Some(r.id), false, r.body.place(*q)));
        }
    }
    let held_movables: BTreeSet<MovableId> = held.values().map(|(m, _)| *m).collect();
    for (rid, (mid, grasp)) in held {
        let (Some(q), Some(m)) = (robot_configs.get(rid), scene.movable(*mid)) else {
            continue;
        };
        bodies.push((Some(*rid), false, m.body.place(compose(*q, grasp.gamma))));
    }
    for m in &scene.movables {
        if held_movables.contains(&m.id) {
            continue;
        }
        if let Some(p) = movable_poses.get(&m.id) {
            bodies.push((None, false, m.body.place(*p)));
        }
    }
    for f in &scene.fixed {
        bodies.push((None, true, f.shape.place(f.pose)));
    }
    for i in 0..bodies.len() {
        for j in (i + 1)..bodies.len() {
            let (oi, fi, ref a) = bodies[i];
            let (oj, fj, ref b) = bodies[j];
            if fi && fj {
                continue;
            }
            if oi.is_some() && oi == oj {
                continue;
            }
            if a.collides(b) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{
          "robots": [{"id": 1, "body": {"disc": 0.3}, "reach": 0.9}],
          "movables": [],
          "fixed": [],
          "regions": [{"id": 1, "polygon": {"poly": [[-1,-1],[1,-1],[1,1],[-1,1]]}, "pose": [0,0,0]}],
          "initial": {"robot_configs": {"1": [3, 0, 0]}, "movable_poses": {}, "movable_regions": {}}
        }"#
    }

    #[test]
    fn loads_minimal_file() {
        let s = load_scenario(minimal()).unwrap();
        assert_eq!(s.robots.len(), 1);
        assert_eq!(s.movables.len(), 0);
        assert_eq!(s.regions.len(), 1);
    }

    #[test]
    fn unknown_key_is_parse_error() {
        let text = minimal().replacen("\"movables\"", "\"extra\": 1, \"movables\"", 1);
        assert!(matches!(load_scenario(&text), Err(ScenarioError::Parse(_))));
    }

    #[test]
    fn overlapping_movables_name_both_ids() {
        let text = r#"{
          "robots": [{"id": 1, "body": {"disc": 0.3}, "reach": 0.9}],
          "movables": [{"id": 1, "body": {"disc": 0.2}}, {"id": 2, "body": {"disc": 0.2}}],
          "fixed": [],
          "regions": [{"id": 1, "polygon": {"poly": [[-1,-1],[1,-1],[1,1],[-1,1]]}, "pose": [0,0,0]}],
          "initial": {"robot_configs": {"1": [3, 0, 0]},
                      "movable_poses": {"1": [0,0,0], "2": [0.1,0,0]},
                      "movable_regions": {"1": 1, "2": 1}}
        }"#;
        match load_scenario(text) {
            Err(ScenarioError::Validation { ids, .. }) => {
                assert!(ids.contains(&"movable 1".to_string()));
                assert!(ids.contains(&"movable 2".to_string()));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn declared_region_is_cross_checked() {
        let text = r#"{
          "robots": [{"id": 1, "body": {"disc": 0.3}, "reach": 0.9}],
          "movables": [{"id": 1, "body": {"disc": 0.2}}],
          "fixed": [],
          "regions": [{"id": 1, "polygon": {"poly": [[-1,-1],[1,-1],[1,1],[-1,1]]}, "pose": [0,0,0]},
                      {"id": 2, "polygon": {"poly": [[-1,-1],[1,-1],[1,1],[-1,1]]}, "pose": [5,5,0]}],
          "initial": {"robot_configs": {"1": [3, 0, 0]},
                      "movable_poses": {"1": [0,0,0]},
                      "movable_regions": {"1": 2}}
        }"#;
        assert!(matches!(load_scenario(text), Err(ScenarioError::Validation { .. })));
    }

    #[test]
    fn concave_region_rejected() {
        let text = minimal().replace("[[-1,-1],[1,-1],[1,1],[-1,1]]", "[[-1,-1],[-1,1],[1,1],[1,-1]]");
        assert!(matches!(load_scenario(&text), Err(ScenarioError::Validation { .. })));
    }

    #[test]
    fn held_object_checked_against_walls_not_its_robot() {
        let mut s = load_scenario(minimal()).unwrap();
        s.movables.push(MovableSpec { id: 1, body: Shape::disc(0.2) });
        s.fixed.push(FixedSpec { id: 1, shape: Shape::rect(0.2, 4.0), pose: Pose2::new(4.0, 0.0, 0.0) });
        let configs: BTreeMap<_, _> = [(1, Pose2::new(3.0, 0.0, 0.0))].into();
        let near = Grasp { r: 1, m: 1, gamma: Pose2::new(0.4, 0.0, 0.0) };
        let far = Grasp { r: 1, m: 1, gamma: Pose2::new(0.8, 0.0, 0.0) };
        let held: BTreeMap<_, _> = [(1, (1, near))].into();
        assert!(in_free_space(&s, &configs, &BTreeMap::new(), &held));
        let held: BTreeMap<_, _> = [(1, (1, far))].into();
        assert!(!in_free_space(&s, &configs, &BTreeMap::new(), &held));
    }

    #[test]
    fn lone_robot_is_free() {
        let s = load_scenario(minimal()).unwrap();
        assert!(in_free_space(
            &s,
            &s.initial.robot_configs,
            &BTreeMap::new(),
            &BTreeMap::new()
        ));
    }
}
