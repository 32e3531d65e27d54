//! Static SVG plot of a scenario and, optionally, a solution path.

use std::fmt::Write;

use mrrefine::geom::{Pose2, Shape};
use mrrefine::pipeline::Solution;
use mrrefine::scene::Scenario;
use mrrefine::task::TaskPlan;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

pub fn robot_color(index: usize) -> &'static str {
    PALETTE[index % PALETTE.len()]
}

fn shape_element(out: &mut String, shape: &Shape, pose: Pose2, style: &str) {
    match shape {
        Shape::Disc(r) => {
            let _ = writeln!(out, r#"  <circle cx="{:.4}" cy="{:.4}" r="{:.4}" {style}/>"#, pose.x, pose.y, r);
        }
        Shape::Poly(v) => {
            let pts: Vec<String> = v
                .iter()
                .map(|p| {
                    let [x, y] = pose.transform_point(*p);
                    format!("{x:.4},{y:.4}")
                })
                .collect();
            let _ = writeln!(out, r#"  <polygon points="{}" {style}/>"#, pts.join(" "));
        }
    }
}

/// Renders regions, fixed shapes, object poses and per-robot polylines.
/// Without a solution only the initial state is drawn.
pub fn render_svg(scene: &Scenario, plan: &TaskPlan, solution: Option<&Solution>) -> String {
    let b = scene.bounds();
    let pad = 0.5;
    let (w, h) = (b.width() + 2.0 * pad, b.height() + 2.0 * pad);
    let scale = 60.0;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.0}" height="{:.0}" viewBox="{:.4} {:.4} {:.4} {:.4}">"#,
        w * scale,
        h * scale,
        b.min[0] - pad,
        -(b.max[1] + pad),
        w,
        h
    );
    // Flip y so the plot uses the workspace orientation.
    let _ = writeln!(out, r#"<g transform="scale(1,-1)">"#);
    for region in &scene.regions {
        shape_element(&mut out, &region.polygon, region.pose, r##"fill="#f3ecd2" stroke="#b59a4a" stroke-width="0.02""##);
    }
    for f in &scene.fixed {
        shape_element(&mut out, &f.shape, f.pose, r##"fill="#555555" stroke="none""##);
    }
    for m in &scene.movables {
        let pose = scene.initial.movable_poses[&m.id];
        shape_element(&mut out, &m.body, pose, r##"fill="none" stroke="#888888" stroke-width="0.02" stroke-dasharray="0.05 0.05""##);
    }
    if let Some(sol) = solution {
        for (id, pose) in &sol.assignment.placements {
            let Some(m) = plan.index_of(id).and_then(|i| scene.movable(plan.action(i).m)) else {
                continue;
            };
            shape_element(&mut out, &m.body, *pose, r##"fill="#bbbbbb" stroke="#444444" stroke-width="0.02""##);
        }
        for (k, robot) in scene.robots.iter().enumerate() {
            let pts: Vec<String> = sol
                .path
                .iter()
                .filter_map(|wp| wp.configs.get(&robot.id))
                .map(|q| format!("{:.4},{:.4}", q.x, q.y))
                .collect();
            let _ = writeln!(
                out,
                r#"  <polyline points="{}" fill="none" stroke="{}" stroke-width="0.03"/>"#,
                pts.join(" "),
                robot_color(k)
            );
        }
    }
    for (k, robot) in scene.robots.iter().enumerate() {
        let q = scene.initial.robot_configs[&robot.id];
        let style = format!(r#"fill="{}" fill-opacity="0.35" stroke="{}" stroke-width="0.02""#, robot_color(k), robot_color(k));
        shape_element(&mut out, &robot.body, q, &style);
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");
    out
}
