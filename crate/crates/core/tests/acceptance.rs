//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any fails.

mod common;

use std::time::Instant;

use mrrefine::pipeline::{final_orderings, refine, validate_solution, Mode, Outcome, PipelineParams, RunReport, Solution};
use mrrefine::placement::{sample_placement, PlacementParams};
use mrrefine::rng::labeled_rng;
use mrrefine::scene::{load_scenario, Scenario};
use mrrefine::task::{load_plan, ActionId, TaskPlan};

const SEEDS: u64 = 25;
// Two-sided 95% quantile of Student's t with 24 degrees of freedom.
const T_24: f64 = 2.064;
const REPEATS: usize = 3;

fn bench(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../benchmarks/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn load(scene: &str, plan: &str) -> (Scenario, TaskPlan) {
    let scene = load_scenario(&bench(scene)).unwrap();
    let plan = load_plan(&bench(plan), &scene).unwrap();
    (scene, plan)
}

fn run(scene: &Scenario, plan: &TaskPlan, mode: Mode, seed: u64) -> RunReport {
    refine(scene, plan, &PipelineParams { mode, seed, ..PipelineParams::default() })
}

fn violations(scene: &Scenario, plan: &TaskPlan, sol: &Solution) -> Vec<String> {
    let prec = match final_orderings(plan, &sol.induced) {
        Ok(p) => p,
        Err(e) => return vec![format!("induced orderings: {e}")],
    };
    validate_solution(scene, plan, &prec, sol).violations.iter().map(|v| format!("{v:?}")).collect()
}

fn mean_ci(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let h = T_24 * sd / n.sqrt();
    (m, m - h, m + h)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

struct Verdicts(Vec<bool>);

impl Verdicts {
    fn report(&mut self, n: usize, name: &str, pass: bool, detail: String) {
        println!("criterion {n} {name:<22} {}  {detail}", if pass { "PASS" } else { "FAIL" });
        self.0.push(pass);
    }
}

fn main() {
    let mut v = Verdicts(Vec::new());
    let (shelf, shelf_plan) = load("shelf3.scn", "shelf3.plan");

    // Full and merge12 alternate seed by seed so machine drift hits both
    // alike; each timing is the fastest of a few repeats.
    let mut full: Vec<RunReport> = Vec::new();
    let (mut full_t, mut merge_t) = (Vec::new(), Vec::new());
    let mut merge_failed = 0;
    for seed in 0..SEEDS {
        let (mut best_f, mut best_m) = (f64::INFINITY, f64::INFINITY);
        for k in 0..REPEATS {
            let f = run(&shelf, &shelf_plan, Mode::Full, seed);
            best_f = best_f.min(f.planning_time_s);
            if k == 0 {
                full.push(f);
            }
            let m = run(&shelf, &shelf_plan, Mode::Merge12, seed);
            best_m = best_m.min(m.planning_time_s);
            if k == 0 && m.outcome.solution().is_none() {
                merge_failed += 1;
            }
        }
        full_t.push(best_f);
        merge_t.push(best_m);
    }

    // 1. Every full run solves, validates clean, and stays under a minute.
    let mut bad = Vec::new();
    for (seed, r) in full.iter().enumerate() {
        match r.outcome.solution() {
            None => bad.push(format!("seed {seed}: {}", r.outcome.name())),
            Some(sol) => {
                let vs = violations(&shelf, &shelf_plan, sol);
                if !vs.is_empty() {
                    bad.push(format!("seed {seed}: {}", vs.join("; ")));
                }
            }
        }
        if r.planning_time_s > 60.0 {
            bad.push(format!("seed {seed}: {:.1} s", r.planning_time_s));
        }
    }
    let slowest = full.iter().map(|r| r.planning_time_s).fold(0.0, f64::max);
    v.report(1, "validator soundness", bad.is_empty(), format!("{} seeds, slowest {slowest:.2} s {bad:?}", full.len()));

    // 2. Makespan against the synchronous baseline.
    let sync: Vec<RunReport> = (0..SEEDS).map(|s| run(&shelf, &shelf_plan, Mode::Synchronous, s)).collect();
    let full_ms: Vec<f64> = full.iter().filter_map(|r| r.makespan).collect();
    let sync_ms: Vec<f64> = sync.iter().filter_map(|r| r.makespan).collect();
    let pass = full_ms.len() == SEEDS as usize && sync_ms.len() == SEEDS as usize && {
        let (fm, _, fhi) = mean_ci(&full_ms);
        let (sm, slo, _) = mean_ci(&sync_ms);
        fm < sm && fhi < slo
    };
    let (fm, flo, fhi) = mean_ci(&full_ms);
    let (sm, slo, shi) = mean_ci(&sync_ms);
    v.report(
        2,
        "makespan",
        pass,
        format!("full {fm:.2} [{flo:.2}, {fhi:.2}] ({} solved), synchronous {sm:.2} [{slo:.2}, {shi:.2}] ({} solved)", full_ms.len(), sync_ms.len()),
    );

    // 3. Planning time of the merged variants.
    let (ft, mt) = (mean(&full_t), mean(&merge_t));
    let merge12_ok = ft <= mt && merge_failed == 0;
    let (tight, tight_plan) = load("shelf3_tight.scn", "shelf3.plan");
    let tight_full: Vec<RunReport> = (0..5).map(|s| run(&tight, &tight_plan, Mode::Full, s)).collect();
    let tight_solved = tight_full.iter().all(|r| r.outcome.solution().is_some());
    let induces = tight_full.iter().any(|r| r.outcome.solution().is_some_and(|s| !s.induced.is_empty()));
    let tight_mean = mean(&tight_full.iter().map(|r| r.planning_time_s).collect::<Vec<_>>());
    // Capped at five times full's mean: hitting the cap is the blow-up.
    let cap = (5.0 * tight_mean).min(600.0);
    let mut blowups = 0;
    for s in 0..5 {
        let start = Instant::now();
        let r = refine(&tight, &tight_plan, &PipelineParams { mode: Mode::Merge123, seed: s, overall_time_limit_s: cap, ..PipelineParams::default() });
        if r.outcome == Outcome::Timeout || start.elapsed().as_secs_f64() > cap {
            blowups += 1;
        }
    }
    let pass = merge12_ok && tight_solved && induces && blowups == 5;
    v.report(
        3,
        "ablation",
        pass,
        format!(
            "full {ft:.3} s <= merge12 {mt:.3} s: {}; tight full {tight_mean:.2} s (orderings induced: {induces}), merge123 over {cap:.1} s in {blowups}/5",
            ft <= mt
        ),
    );

    // 4. Composite search against the tensor-product oracle.
    let mut disagree = Vec::new();
    let (mut feasible, mut infeasible) = (0, 0);
    for k in 0..60 {
        let (expected, found, unsound) = common::grid::check(k);
        if expected != found || unsound.is_some() {
            disagree.push(k);
        }
        if expected {
            feasible += 1;
        } else {
            infeasible += 1;
        }
    }
    v.report(4, "oracle equivalence", disagree.is_empty(), format!("60 instances, {feasible} feasible, {infeasible} infeasible, disagreements {disagree:?}"));

    // 5. Orderings are induced only where the regions force them.
    let (spacious, spacious_plan) = load("spacious.scn", "spacious.plan");
    let mut spacious_bad = Vec::new();
    for s in 0..SEEDS {
        let r = run(&spacious, &spacious_plan, Mode::Full, s);
        match r.outcome.solution() {
            Some(sol) if sol.induced.is_empty() => {}
            Some(sol) => spacious_bad.push(format!("seed {s}: {:?}", sol.induced)),
            None => spacious_bad.push(format!("seed {s}: {}", r.outcome.name())),
        }
    }
    let (oneslot, oneslot_plan) = load("oneslot.scn", "oneslot.plan");
    let region = oneslot.region(1).unwrap();
    let incoming = &oneslot.movable(2).unwrap().body;
    let occupant = oneslot.movable(1).unwrap().body.bounding_radius();
    let occupant_at = oneslot.initial.movable_poses[&1];
    let clearance = PlacementParams::default().clearance;
    let mut oneslot_bad = Vec::new();
    for s in 0..SEEDS {
        // If no sampled pose for the incoming object clears the occupant, the
        // occupant must leave first, and that is the only edge.
        let samples = sample_placement(region, incoming, 2, &mut labeled_rng(s, "enum"), 50).unwrap();
        let coexist = samples
            .iter()
            .any(|p| (p.x - occupant_at.x).hypot(p.y - occupant_at.y) - occupant - incoming.bounding_radius() > clearance);
        let expected: Vec<[ActionId; 2]> = if coexist { Vec::new() } else { vec![[ActionId::from("r1a1"), ActionId::from("r2a2")]] };
        let r = run(&oneslot, &oneslot_plan, Mode::Full, s);
        match r.outcome.solution() {
            Some(sol) if sol.induced == expected => {}
            Some(sol) => oneslot_bad.push(format!("seed {s}: {:?}", sol.induced)),
            None => oneslot_bad.push(format!("seed {s}: {}", r.outcome.name())),
        }
    }
    v.report(
        5,
        "least commitment",
        spacious_bad.is_empty() && oneslot_bad.is_empty(),
        format!("spacious {}/25 without orderings, one-slot {}/25 exact {spacious_bad:?} {oneslot_bad:?}", 25 - spacious_bad.len(), 25 - oneslot_bad.len()),
    );

    // 6. Identical inputs give identical bytes.
    let first = full[0].outcome.solution().map(Solution::to_json);
    let again = run(&shelf, &shelf_plan, Mode::Full, 0).outcome.solution().map(Solution::to_json);
    let pass = first.is_some() && first == again;
    v.report(6, "determinism", pass, format!("{} bytes", first.map_or(0, |s| s.len())));

    // 7. Synchronous solutions satisfy the asynchronous validator.
    let mut sync_bad = Vec::new();
    for (seed, r) in sync.iter().enumerate() {
        match r.outcome.solution() {
            None => sync_bad.push(format!("seed {seed}: {}", r.outcome.name())),
            Some(sol) => {
                let vs = violations(&shelf, &shelf_plan, sol);
                if !vs.is_empty() {
                    sync_bad.push(format!("seed {seed}: {}", vs.join("; ")));
                }
            }
        }
    }
    v.report(7, "synchronous subset", sync_bad.is_empty(), format!("{}/25 clean {sync_bad:?}", 25 - sync_bad.len()));

    let failed = v.0.iter().filter(|p| !**p).count();
    println!("{} of {} criteria pass", v.0.len() - failed, v.0.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
