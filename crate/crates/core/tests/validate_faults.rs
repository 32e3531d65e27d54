use std::sync::OnceLock;

use mrrefine::geom::Pose2;
use mrrefine::pipeline::{final_orderings, path_makespan, refine, validate_solution, Outcome, PipelineParams, Solution, ValidationReport, ViolationKind};
use mrrefine::scene::{load_scenario, Scenario};
use mrrefine::task::{load_plan, ActionId, TaskPlan};

fn bench(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../benchmarks/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn fixture() -> &'static (Scenario, TaskPlan, Solution) {
    static CELL: OnceLock<(Scenario, TaskPlan, Solution)> = OnceLock::new();
    CELL.get_or_init(|| {
        let scene = load_scenario(&bench("spacious.scn")).unwrap();
        let plan = load_plan(&bench("spacious.plan"), &scene).unwrap();
        let report = refine(&scene, &plan, &PipelineParams::default());
        let Outcome::Solved(sol) = report.outcome else { panic!("spacious did not solve: {:?}", report.outcome.name()) };
        (scene, plan, *sol)
    })
}

fn check(sol: &Solution) -> ValidationReport {
    let (scene, plan, _) = fixture();
    let prec = final_orderings(plan, &sol.induced).unwrap();
    validate_solution(scene, plan, &prec, sol)
}

#[test]
fn planner_output_is_clean() {
    let (_, _, sol) = fixture();
    let rep = check(sol);
    assert!(rep.is_clean(), "{:?}", rep.violations);
}

#[test]
fn teleport_into_a_wall_is_one_collision() {
    let (_, _, sol) = fixture();
    let mut bad = sol.clone();
    // An interior waypoint where nothing fires.
    let k = (1..bad.path.len() - 1).find(|&k| bad.path[k].fired.is_empty()).expect("a plain waypoint");
    // Centre of the bottom wall.
    bad.path[k].configs.insert(1, Pose2::new(5.0, -0.1, 0.0));
    bad.makespan = path_makespan(&bad.path, bad.params.rotation_weight);
    let rep = check(&bad);
    assert_eq!(rep.count(ViolationKind::CFree), 1, "{:?}", rep.violations);
    assert_eq!(rep.violations.len(), 1, "{:?}", rep.violations);
}

#[test]
fn swapped_grasp_offsets_break_kinematics() {
    let (_, _, sol) = fixture();
    let mut bad = sol.clone();
    let a = ActionId::from("r1a1");
    let b = ActionId::from("r2a1");
    let ga = bad.assignment.grasps[&a];
    let gb = bad.assignment.grasps[&b];
    assert_ne!(ga.gamma, gb.gamma);
    bad.assignment.grasps.get_mut(&a).unwrap().gamma = gb.gamma;
    bad.assignment.grasps.get_mut(&b).unwrap().gamma = ga.gamma;
    let rep = check(&bad);
    assert!(rep.count(ViolationKind::Kin) >= 2, "{:?}", rep.violations);
    assert_eq!(rep.count(ViolationKind::Grasp), 0);
}

#[test]
fn grasp_for_the_wrong_object_is_reported() {
    let (_, _, sol) = fixture();
    let mut bad = sol.clone();
    bad.assignment.grasps.get_mut(&ActionId::from("r1a1")).unwrap().m = 2;
    let rep = check(&bad);
    assert!(rep.count(ViolationKind::Grasp) >= 1, "{:?}", rep.violations);
}

#[test]
fn dropped_firing_is_incomplete() {
    let (_, _, sol) = fixture();
    let mut bad = sol.clone();
    let last = bad.path.iter().rposition(|w| !w.fired.is_empty()).unwrap();
    let id = bad.path[last].fired.pop().unwrap();
    let rep = check(&bad);
    assert!(rep.violations.iter().any(|v| v.kind == ViolationKind::Incomplete && v.location == id.as_str()), "{:?}", rep.violations);
}

#[test]
fn placement_outside_its_region_is_reported() {
    let (_, _, sol) = fixture();
    let mut bad = sol.clone();
    bad.assignment.placements.insert(ActionId::from("r1a2"), Pose2::new(50.0, 50.0, 0.0));
    let rep = check(&bad);
    assert!(rep.count(ViolationKind::Contain) >= 1, "{:?}", rep.violations);
}

#[test]
fn wrong_makespan_is_reported() {
    let (_, _, sol) = fixture();
    let mut bad = sol.clone();
    bad.makespan += 1.0;
    let rep = check(&bad);
    assert_eq!(rep.count(ViolationKind::Makespan), 1);
}

#[test]
fn reversed_firing_order_breaks_precedence() {
    let (_, _, sol) = fixture();
    let mut bad = sol.clone();
    // Fire each robot's transfer at the waypoint of its transit and vice versa.
    let at = |p: &Solution, id: &str| p.path.iter().position(|w| w.fired.iter().any(|f| f.as_str() == id)).unwrap();
    let (i, j) = (at(&bad, "r1a1"), at(&bad, "r1a2"));
    bad.path[i].fired.retain(|f| f.as_str() != "r1a1");
    bad.path[j].fired.retain(|f| f.as_str() != "r1a2");
    bad.path[i].fired.push(ActionId::from("r1a2"));
    bad.path[j].fired.push(ActionId::from("r1a1"));
    let rep = check(&bad);
    assert!(rep.count(ViolationKind::Prec) >= 1, "{:?}", rep.violations);
}
