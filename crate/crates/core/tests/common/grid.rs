//! Two disc robots on small grids, with a breadth-first search of the
//! explicit tensor-product graph as the feasibility oracle.

use std::collections::{BTreeSet, VecDeque};

use mrrefine::deadline::Deadline;
use mrrefine::drrt::{drrt_search, CompositeWorld, DiscFleet, DrrtParams};
use mrrefine::geom::{Pose2, RigidBodies, Shape};
use mrrefine::prm::Roadmap;
use mrrefine::rng::labeled_rng;
use mrrefine::scene::Bounds;
use rand::seq::SliceRandom;
use rand::Rng;

pub const RADIUS: f64 = 0.3;

pub struct Grid {
    pub w: usize,
    pub h: usize,
    pub free: Vec<bool>,
}

impl Grid {
    pub fn xy(&self, c: usize) -> (f64, f64) {
        ((c % self.w) as f64, (c / self.w) as f64)
    }

    pub fn neighbours(&self, c: usize) -> Vec<usize> {
        let (x, y) = (c % self.w, c / self.w);
        let mut out = Vec::new();
        if x > 0 {
            out.push(c - 1);
        }
        if x + 1 < self.w {
            out.push(c + 1);
        }
        if y > 0 {
            out.push(c - self.w);
        }
        if y + 1 < self.h {
            out.push(c + self.w);
        }
        out.retain(|&n| self.free[n]);
        out.sort_unstable();
        out
    }

    pub fn roadmap(&self, start: usize, goal: usize) -> Roadmap {
        let n = self.w * self.h;
        Roadmap {
            vertices: (0..n).map(|c| {
                let (x, y) = self.xy(c);
                Pose2::new(x, y, 0.0)
            }).collect(),
            adj: (0..n)
                .map(|c| if self.free[c] { self.neighbours(c).into_iter().map(|v| (v, 1.0)).collect() } else { Vec::new() })
                .collect(),
            start,
            goal,
        }
    }
}

/// Closest approach of two discs moving linearly over the same unit interval.
pub fn min_distance(a0: (f64, f64), a1: (f64, f64), b0: (f64, f64), b1: (f64, f64)) -> f64 {
    let d0 = (b0.0 - a0.0, b0.1 - a0.1);
    let dv = ((b1.0 - b0.0) - (a1.0 - a0.0), (b1.1 - b0.1) - (a1.1 - a0.1));
    let vv = dv.0 * dv.0 + dv.1 * dv.1;
    let t = if vv == 0.0 { 0.0 } else { (-(d0.0 * dv.0 + d0.1 * dv.1) / vv).clamp(0.0, 1.0) };
    (d0.0 + t * dv.0).hypot(d0.1 + t * dv.1)
}

pub fn move_ok(g: &Grid, from: (usize, usize), to: (usize, usize)) -> bool {
    min_distance(g.xy(from.0), g.xy(to.0), g.xy(from.1), g.xy(to.1)) > 2.0 * RADIUS
}

/// A robot that reaches its goal stays there.
pub fn bfs_feasible(g: &Grid, starts: (usize, usize), goals: (usize, usize)) -> bool {
    let options = |c: usize, goal: usize| -> Vec<usize> {
        let mut o = vec![c];
        if c != goal {
            o.extend(g.neighbours(c));
        }
        o
    };
    let mut seen = BTreeSet::from([starts]);
    let mut queue = VecDeque::from([starts]);
    while let Some(s) = queue.pop_front() {
        if s == goals {
            return true;
        }
        for a in options(s.0, goals.0) {
            for b in options(s.1, goals.1) {
                let t = (a, b);
                if t != s && move_ok(g, s, t) && seen.insert(t) {
                    queue.push_back(t);
                }
            }
        }
    }
    false
}

pub struct Instance {
    pub grid: Grid,
    pub starts: (usize, usize),
    pub goals: (usize, usize),
}

pub fn instance(k: u64) -> Instance {
    let mut rng = labeled_rng(k, "grid");
    loop {
        let w = rng.gen_range(2..=5);
        let h = rng.gen_range(1..=5);
        let free: Vec<bool> = (0..w * h).map(|_| rng.gen_bool(0.75)).collect();
        let cells: Vec<usize> = (0..w * h).filter(|&c| free[c]).collect();
        if cells.len() < 3 {
            continue;
        }
        let s: Vec<usize> = cells.choose_multiple(&mut rng, 2).copied().collect();
        let g: Vec<usize> = cells.choose_multiple(&mut rng, 2).copied().collect();
        return Instance {
            grid: Grid { w, h, free },
            starts: (s[0], s[1]),
            goals: (g[0], g[1]),
        };
    }
}

pub fn fleet(inst: &Instance) -> DiscFleet {
    let g = &inst.grid;
    DiscFleet {
        bodies: vec![RigidBodies::single(Shape::disc(RADIUS)); 2],
        roadmaps: vec![g.roadmap(inst.starts.0, inst.goals.0), g.roadmap(inst.starts.1, inst.goals.1)],
        bounds: Bounds { min: [-0.5, -0.5], max: [g.w as f64 - 0.5, g.h as f64 - 0.5] },
        step: 0.05,
        margin: 0.0,
        rotation_weight: 0.5,
    }
}

/// Runs the composite search on instance `k`. Returns the oracle's verdict,
/// the search's verdict, and a description of the first unsound step if any.
pub fn check(k: u64) -> (bool, bool, Option<String>) {
    let inst = instance(k);
    let expected = bfs_feasible(&inst.grid, inst.starts, inst.goals);
    let world = fleet(&inst);
    let params = DrrtParams {
        deadline: Deadline::after_secs(20.0),
        max_iterations: 20_000,
        ..DrrtParams::default()
    };
    let Ok(path) = drrt_search(&world, &mut labeled_rng(k, "search"), &params) else {
        return (expected, false, None);
    };
    let cell = |s: &[(usize, usize)], r: usize| {
        let q = world.config(r, s[r]);
        (q.y as usize) * inst.grid.w + q.x as usize
    };
    // Every step is an edge of the tensor-product graph.
    for pair in path.states.windows(2) {
        let from = (cell(&pair[0], 0), cell(&pair[0], 1));
        let to = (cell(&pair[1], 0), cell(&pair[1], 1));
        for (a, b) in [(from.0, to.0), (from.1, to.1)] {
            if a != b && !inst.grid.neighbours(a).contains(&b) {
                return (expected, true, Some(format!("{a} -> {b} is not an edge")));
            }
        }
        if !move_ok(&inst.grid, from, to) {
            return (expected, true, Some(format!("{from:?} -> {to:?} collides")));
        }
    }
    let last = path.states.last().unwrap();
    if (cell(last, 0), cell(last, 1)) != inst.goals {
        return (expected, true, Some("path ends off the goals".into()));
    }
    (expected, true, None)
}
