use std::collections::BTreeMap;

use mrrefine::geom::{Pose2, Shape};
use mrrefine::scene::{
    in_free_space, load_scenario, FixedSpec, InitialState, MovableSpec, RegionSpec, RobotSpec, Scenario, ScenarioError,
};
use mrrefine::task::Grasp;
use proptest::prelude::*;

fn bench(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../benchmarks/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

/// Every convex shape used here as a list of boundary points fine enough for
/// a distance test between discs and axis-aligned rectangles.
fn overlap_oracle(a: &Shape, pa: Pose2, b: &Shape, pb: Pose2) -> bool {
    match (a, b) {
        (Shape::Disc(ra), Shape::Disc(rb)) => (pa.x - pb.x).hypot(pa.y - pb.y) <= ra + rb,
        (Shape::Disc(r), Shape::Poly(v)) | (Shape::Poly(v), Shape::Disc(r)) => {
            let (c, pp) = if matches!(a, Shape::Disc(_)) { (pa, pb) } else { (pb, pa) };
            // Axis-aligned rectangles only.
            let xs: Vec<f64> = v.iter().map(|p| p[0] + pp.x).collect();
            let ys: Vec<f64> = v.iter().map(|p| p[1] + pp.y).collect();
            let cx = c.x.clamp(xs.iter().cloned().fold(f64::INFINITY, f64::min), xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            let cy = c.y.clamp(ys.iter().cloned().fold(f64::INFINITY, f64::min), ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            (c.x - cx).hypot(c.y - cy) <= *r
        }
        (Shape::Poly(va), Shape::Poly(vb)) => {
            let span = |v: &[[f64; 2]], p: Pose2, k: usize| {
                let off = if k == 0 { p.x } else { p.y };
                let lo = v.iter().map(|q| q[k] + off).fold(f64::INFINITY, f64::min);
                let hi = v.iter().map(|q| q[k] + off).fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            };
            (0..2).all(|k| {
                let (a0, a1) = span(va, pa, k);
                let (b0, b1) = span(vb, pb, k);
                a0 <= b1 && b0 <= a1
            })
        }
    }
}

#[test]
fn shelf3_loads_with_expected_counts() {
    let scene = load_scenario(&bench("shelf3.scn")).unwrap();
    assert_eq!((scene.robots.len(), scene.movables.len(), scene.regions.len()), (3, 4, 4));
}

#[test]
fn shelf3_initial_state_is_free_by_exhaustive_check() {
    let scene = load_scenario(&bench("shelf3.scn")).unwrap();
    let mut bodies: Vec<(bool, Shape, Pose2)> = Vec::new();
    for r in &scene.robots {
        bodies.push((false, r.body.clone(), scene.initial.robot_configs[&r.id]));
    }
    for m in &scene.movables {
        bodies.push((false, m.body.clone(), scene.initial.movable_poses[&m.id]));
    }
    for f in &scene.fixed {
        bodies.push((true, f.shape.clone(), f.pose));
    }
    for i in 0..bodies.len() {
        for j in i + 1..bodies.len() {
            if bodies[i].0 && bodies[j].0 {
                continue;
            }
            assert!(!overlap_oracle(&bodies[i].1, bodies[i].2, &bodies[j].1, bodies[j].2), "bodies {i} and {j} overlap");
        }
    }
    assert!(in_free_space(&scene, &scene.initial.robot_configs, &scene.initial.movable_poses, &BTreeMap::new()));
}

const MINIMAL: &str = r#"{"robots": [{"id": 1, "body": {"disc": 0.3}, "reach": 0.9}], "movables": [], "fixed": [],
  "regions": [{"id": 1, "polygon": {"poly": [[-1,-1],[1,-1],[1,1],[-1,1]]}, "pose": [0,0,0]}],
  "initial": {"robot_configs": {"1": [3, 0, 0]}, "movable_poses": {}, "movable_regions": {}}}"#;

#[test]
fn minimal_file_loads() {
    let s = load_scenario(MINIMAL).unwrap();
    assert_eq!((s.robots.len(), s.movables.len()), (1, 0));
    assert!(in_free_space(&s, &s.initial.robot_configs, &s.initial.movable_poses, &BTreeMap::new()));
}

#[test]
fn unknown_key_is_a_parse_error() {
    let text = MINIMAL.replacen("\"fixed\": []", "\"fixed\": [], \"extra\": 1", 1);
    assert!(matches!(load_scenario(&text), Err(ScenarioError::Parse(_))));
}

#[test]
fn overlapping_movables_name_both_ids() {
    let text = MINIMAL
        .replace(r#""movables": []"#, r#""movables": [{"id": 4, "body": {"disc": 0.2}}, {"id": 7, "body": {"disc": 0.2}}]"#)
        .replace(r#""movable_poses": {}"#, r#""movable_poses": {"4": [0, 0, 0], "7": [0.3, 0, 0]}"#)
        .replace(r#""movable_regions": {}"#, r#""movable_regions": {"4": 1, "7": 1}"#);
    match load_scenario(&text) {
        Err(ScenarioError::Validation { ids, .. }) => {
            let joined = ids.join(" ");
            assert!(joined.contains('4') && joined.contains('7'), "{joined}");
        }
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn held_object_is_checked_against_walls_but_not_its_robot() {
    let text = MINIMAL
        .replace(r#""movables": []"#, r#""movables": [{"id": 1, "body": {"disc": 0.1}}]"#)
        .replace(r#""fixed": []"#, r#""fixed": [{"id": 1, "shape": {"poly": [[-0.1,-1],[0.1,-1],[0.1,1],[-0.1,1]]}, "pose": [4, 0, 0]}]"#)
        .replace(r#""movable_poses": {}"#, r#""movable_poses": {"1": [0, 0, 0]}"#)
        .replace(r#""movable_regions": {}"#, r#""movable_regions": {"1": 1}"#);
    let s = load_scenario(&text).unwrap();
    let mut held = BTreeMap::new();
    // Object overlapping the robot body is fine.
    held.insert(1, (1, Grasp { r: 1, m: 1, gamma: Pose2::new(0.2, 0.0, 0.0) }));
    assert!(in_free_space(&s, &s.initial.robot_configs, &s.initial.movable_poses, &held));
    // Object pushed into the wall is not.
    held.insert(1, (1, Grasp { r: 1, m: 1, gamma: Pose2::new(0.9, 0.0, 0.0) }));
    assert!(!in_free_space(&s, &s.initial.robot_configs, &s.initial.movable_poses, &held));
}

fn scene_strategy() -> impl Strategy<Value = Scenario> {
    let robots = proptest::collection::vec((0.1..0.4f64, 0.5..1.5f64, -8.0..8.0f64, -8.0..8.0f64, -3.0..3.0f64), 1..4);
    let movables = proptest::collection::vec((0.05..0.3f64, -1.5..1.5f64, -1.5..1.5f64), 0..3);
    let fixed = proptest::collection::vec((0.1..2.0f64, 0.1..2.0f64, -8.0..8.0f64, -8.0..8.0f64), 0..4);
    (robots, movables, fixed).prop_map(|(robots, movables, fixed)| Scenario {
        robots: robots
            .iter()
            .enumerate()
            .map(|(i, r)| RobotSpec { id: i as u32 + 1, body: Shape::disc(r.0), reach: r.1 })
            .collect(),
        movables: movables
            .iter()
            .enumerate()
            .map(|(i, m)| MovableSpec { id: i as u32 + 1, body: Shape::disc(m.0) })
            .collect(),
        fixed: fixed
            .iter()
            .enumerate()
            .map(|(i, f)| FixedSpec { id: i as u32 + 1, shape: Shape::rect(f.0, f.1), pose: Pose2::new(f.2, f.3, 0.0) })
            .collect(),
        regions: vec![RegionSpec { id: 1, polygon: Shape::rect(4.0, 4.0), pose: Pose2::IDENTITY }],
        initial: InitialState {
            robot_configs: robots.iter().enumerate().map(|(i, r)| (i as u32 + 1, Pose2::new(r.2, r.3, r.4))).collect(),
            movable_poses: movables.iter().enumerate().map(|(i, m)| (i as u32 + 1, Pose2::new(m.1, m.2, 0.0))).collect(),
            movable_regions: (0..movables.len()).map(|i| (i as u32 + 1, 1)).collect(),
        },
    })
}

proptest! {
    #[test]
    fn free_space_matches_pairwise_oracle(scene in scene_strategy()) {
        let mut bodies: Vec<(bool, Shape, Pose2)> = Vec::new();
        for r in &scene.robots {
            bodies.push((false, r.body.clone(), scene.initial.robot_configs[&r.id]));
        }
        for m in &scene.movables {
            bodies.push((false, m.body.clone(), scene.initial.movable_poses[&m.id]));
        }
        for f in &scene.fixed {
            bodies.push((true, f.shape.clone(), f.pose));
        }
        let mut free = true;
        for i in 0..bodies.len() {
            for j in i + 1..bodies.len() {
                if !(bodies[i].0 && bodies[j].0) && overlap_oracle(&bodies[i].1, bodies[i].2, &bodies[j].1, bodies[j].2) {
                    free = false;
                }
            }
        }
        prop_assert_eq!(in_free_space(&scene, &scene.initial.robot_configs, &scene.initial.movable_poses, &BTreeMap::new()), free);
    }

    #[test]
    fn valid_scenarios_round_trip(scene in scene_strategy()) {
        prop_assume!(scene.validate().is_ok());
        let back = load_scenario(&scene.to_json()).unwrap();
        prop_assert_eq!(back, scene);
    }
}
