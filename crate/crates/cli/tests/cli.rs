use std::path::{Path, PathBuf};

use mrrefine_cli::{run, EXIT_INPUT, EXIT_OK};

fn bench(name: &str) -> String {
    format!("{}/../../benchmarks/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn call(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let argv: Vec<String> = std::iter::once("mrrefine".to_string()).chain(args.iter().map(|s| s.to_string())).collect();
    let code = run(argv, &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn solve_spacious(dir: &Path, seed: &str) -> PathBuf {
    let out = dir.join(format!("sol{seed}.json"));
    let (code, stdout) = call(&["solve", &bench("spacious.scn"), &bench("spacious.plan"), "--seed", seed, "--out", path_str(&out)]);
    assert_eq!(code, EXIT_OK, "{stdout}");
    let summary: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(summary["outcome"], "solution");
    out
}

#[test]
fn solve_writes_a_solution_that_validates() {
    let dir = tempfile::tempdir().unwrap();
    let sol = solve_spacious(dir.path(), "2");
    assert!(sol.exists());
    let (code, stdout) = call(&["validate", &bench("spacious.scn"), &bench("spacious.plan"), path_str(&sol)]);
    assert_eq!(code, EXIT_OK, "{stdout}");
    assert!(stdout.contains("0 violation(s)"));
}

#[test]
fn tampered_solution_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let sol = solve_spacious(dir.path(), "3");
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    let m = v["makespan"].as_f64().unwrap();
    v["makespan"] = serde_json::json!(m + 5.0);
    std::fs::write(&sol, v.to_string()).unwrap();
    let (code, stdout) = call(&["validate", &bench("spacious.scn"), &bench("spacious.plan"), path_str(&sol)]);
    assert_eq!(code, EXIT_INPUT);
    assert!(stdout.contains("Makespan"), "{stdout}");
}

#[test]
fn repeated_solves_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = std::fs::read(solve_spacious(dir.path(), "5")).unwrap();
    let b_path = dir.path().join("again.json");
    let (code, _) = call(&["solve", &bench("spacious.scn"), &bench("spacious.plan"), "--seed", "5", "--out", path_str(&b_path)]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(a, std::fs::read(b_path).unwrap());
}

#[test]
fn bench_prints_one_row_per_seed_and_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sols");
    let (code, stdout) = call(&["bench", &bench("spacious.scn"), &bench("spacious.plan"), "--seeds", "2", "--out", path_str(&out)]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "seed,mode,outcome,planning_time_s,makespan");
    assert_eq!(lines.len(), 1 + 2 * 4);
    let modes: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(modes, ["full", "merge12", "merge123", "synchronous", "full", "merge12", "merge123", "synchronous"]);
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), 5);
        assert!(l.contains(",solution,"), "{l}");
    }
    assert!(out.join("seed0_full.json").exists());
    assert!(out.join("seed1_synchronous.json").exists());
}

#[test]
fn bench_with_one_mode_and_parallel_jobs() {
    let (code, stdout) = call(&["bench", &bench("spacious.scn"), &bench("spacious.plan"), "--seeds", "3", "--mode", "full", "--jobs", "2"]);
    assert_eq!(code, EXIT_OK);
    let seeds: Vec<&str> = stdout.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(seeds, ["0", "1", "2"]);
}

#[test]
fn render_is_deterministic_svg() {
    let dir = tempfile::tempdir().unwrap();
    let sol = solve_spacious(dir.path(), "1");
    let (a, b) = (dir.path().join("a.svg"), dir.path().join("b.svg"));
    for out in [&a, &b] {
        let (code, _) = call(&["render", &bench("spacious.scn"), &bench("spacious.plan"), path_str(&sol), "--out", path_str(out)]);
        assert_eq!(code, EXIT_OK);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("<svg") || text.starts_with("<?xml"));
    assert!(text.contains("<polyline"));
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
}

#[test]
fn render_without_solution_draws_the_scene() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scene.svg");
    let (code, _) = call(&["render", &bench("shelf3.scn"), &bench("shelf3.plan"), "--out", path_str(&out)]);
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(!text.contains("<polyline"));
    assert!(text.contains("<rect") || text.contains("<polygon"));
}

#[test]
fn bad_inputs_exit_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.scn");
    std::fs::write(&broken, "{not json").unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["solve".into(), path_str(&broken).into(), bench("spacious.plan")],
        vec!["solve".into(), bench("spacious.scn"), dir.path().join("missing.plan").to_str().unwrap().into()],
        vec!["solve".into(), bench("spacious.scn"), bench("spacious.plan"), "--n-prm".into(), "0".into()],
        vec!["solve".into(), bench("spacious.scn"), bench("spacious.plan"), "--mode".into(), "fastest".into()],
        vec!["frobnicate".into()],
    ];
    for args in cases {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, _) = call(&refs);
        assert_eq!(code, EXIT_INPUT, "{args:?}");
    }
}

#[test]
fn plan_for_another_scene_is_rejected() {
    // The shelf plan names robots and objects the spacious scene lacks.
    let (code, _) = call(&["solve", &bench("spacious.scn"), &bench("shelf3.plan")]);
    assert_eq!(code, EXIT_INPUT);
}
