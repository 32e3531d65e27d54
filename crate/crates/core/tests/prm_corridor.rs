use mrrefine::deadline::Deadline;
use mrrefine::geom::{Placed, Pose2, Shape};
use mrrefine::prm::{build_roadmap, carried_bodies, PrmError, PrmParams};
use mrrefine::rng::labeled_rng;
use mrrefine::scene::{Bounds, MovableSpec, RobotSpec};
use mrrefine::task::Grasp;

// Two rooms joined by a corridor of width 1 between x = 3.5 and x = 4.5.
fn walls() -> Vec<Placed> {
    vec![
        Shape::rect(1.0, 1.0).place(Pose2::new(4.0, 0.5, 0.0)),
        Shape::rect(1.0, 1.0).place(Pose2::new(4.0, 2.5, 0.0)),
    ]
}

fn bounds() -> Bounds {
    Bounds { min: [0.0, 0.0], max: [8.0, 3.0] }
}

fn params() -> PrmParams {
    PrmParams { n: 400, k: 10, step: 0.05, clearance: 0.03, rotation_weight: 0.5 }
}

fn robot() -> RobotSpec {
    RobotSpec { id: 1, body: Shape::disc(0.3), reach: 1.2 }
}

/// Distance from a point to an axis-aligned box.
fn box_distance(p: (f64, f64), lo: (f64, f64), hi: (f64, f64)) -> f64 {
    let dx = (lo.0 - p.0).max(0.0).max(p.0 - hi.0);
    let dy = (lo.1 - p.1).max(0.0).max(p.1 - hi.1);
    dx.hypot(dy)
}

#[test]
fn bare_robot_crosses_the_corridor() {
    let bodies = carried_bodies(&robot(), None);
    let boxes = [((3.5, 0.0), (4.5, 1.0)), ((3.5, 2.0), (4.5, 3.0))];
    for seed in 0..5 {
        let rm = build_roadmap(
            &bodies,
            Pose2::new(1.0, 1.5, 0.0),
            Pose2::new(7.0, 1.5, 0.0),
            &walls(),
            bounds(),
            &params(),
            &mut labeled_rng(seed, "corridor"),
            Deadline::never(),
        )
        .unwrap();
        let (path, cost) = rm.shortest_path().unwrap();
        assert!(cost >= 6.0, "cost {cost} below the straight-line distance");
        // Every sampled point along the path stays clear of both blocks.
        for w in path.windows(2) {
            let (a, b) = (rm.vertices[w[0]], rm.vertices[w[1]]);
            for k in 0..=100 {
                let s = k as f64 / 100.0;
                let p = (a.x + s * (b.x - a.x), a.y + s * (b.y - a.y));
                for (lo, hi) in boxes {
                    assert!(box_distance(p, lo, hi) > 0.3, "seed {seed}: {p:?} touches a wall");
                }
            }
        }
    }
}

#[test]
fn robot_carrying_a_wide_object_is_cut_off() {
    let object = MovableSpec { id: 1, body: Shape::disc(0.55) };
    let grasp = Grasp { r: 1, m: 1, gamma: Pose2::new(0.9, 0.0, 0.0) };
    let bodies = carried_bodies(&robot(), Some((&object, &grasp)));
    for seed in 0..3 {
        let err = build_roadmap(
            &bodies,
            Pose2::new(1.0, 1.5, 0.0),
            Pose2::new(7.0, 1.5, 0.0),
            &walls(),
            bounds(),
            &params(),
            &mut labeled_rng(seed, "corridor"),
            Deadline::never(),
        )
        .unwrap_err();
        assert_eq!(err, PrmError::Disconnected);
    }
}

#[test]
fn endpoint_inside_a_wall_is_rejected() {
    let bodies = carried_bodies(&robot(), None);
    let err = build_roadmap(
        &bodies,
        Pose2::new(4.0, 0.5, 0.0),
        Pose2::new(7.0, 1.5, 0.0),
        &walls(),
        bounds(),
        &params(),
        &mut labeled_rng(0, "corridor"),
        Deadline::never(),
    )
    .unwrap_err();
    assert_eq!(err, PrmError::InvalidEndpoint);
}
