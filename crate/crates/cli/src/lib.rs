//! Command-line front end: solve, validate, bench and render.

pub mod render;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mrrefine::pipeline::{final_orderings, refine, validate_solution, Mode, Outcome, PipelineParams, RunReport, Solution};
use mrrefine::scene::{load_scenario, Scenario};
use mrrefine::task::{load_plan, TaskPlan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_PLANNER: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mrrefine", version, about = "Refinement planner for multi-robot pick-and-place task plans")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Refine a task plan and write the solution file.
    Solve {
        scenario: PathBuf,
        plan: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        /// Solution output path.
        #[arg(long, default_value = "solution.out")]
        out: PathBuf,
    },
    /// Check a solution file; exits 0 iff no violation is found.
    Validate { scenario: PathBuf, plan: PathBuf, solution: PathBuf },
    /// Run every mode over a range of seeds and print a CSV table.
    Bench {
        scenario: PathBuf,
        plan: PathBuf,
        #[arg(long, default_value_t = 25)]
        seeds: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Directory for the solution files of solved runs.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Draw the scenario and optionally a solution as SVG.
    Render {
        scenario: PathBuf,
        plan: PathBuf,
        solution: Option<PathBuf>,
        #[arg(long, default_value = "plan.svg")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub n_place: Option<usize>,
    #[arg(long)]
    pub n_grasp: Option<usize>,
    #[arg(long)]
    pub n_prm: Option<usize>,
    #[arg(long)]
    pub k_prm: Option<usize>,
    /// Overall planning time limit.
    #[arg(long)]
    pub time_limit_s: Option<f64>,
    /// full, merge12, merge123 or synchronous; bench runs all four when unset.
    #[arg(long)]
    pub mode: Option<Mode>,
}

impl ParamArgs {
    pub fn to_params(&self) -> PipelineParams {
        let d = PipelineParams::default();
        PipelineParams {
            seed: self.seed,
            mode: self.mode.unwrap_or(Mode::Full),
            n_place: self.n_place.unwrap_or(d.n_place),
            n_grasp: self.n_grasp.unwrap_or(d.n_grasp),
            n_prm: self.n_prm.unwrap_or(d.n_prm),
            k_prm: self.k_prm.unwrap_or(d.k_prm),
            overall_time_limit_s: self.time_limit_s.unwrap_or(d.overall_time_limit_s),
            ..d
        }
    }
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))
}

fn load_inputs(scenario: &Path, plan: &Path) -> Result<(Scenario, TaskPlan), Failure> {
    let scene = load_scenario(&read(scenario)?).map_err(|e| input_error(format!("{}: {e}", scenario.display())))?;
    let plan_v = load_plan(&read(plan)?, &scene).map_err(|e| input_error(format!("{}: {e}", plan.display())))?;
    Ok((scene, plan_v))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure {
        code: EXIT_INTERNAL,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn check_params(p: &PipelineParams) -> Result<(), Failure> {
    p.check().map_err(input_error)
}

/// Initializes logging from `MRREFINE_LOG` (off, info or debug).
pub fn init_logging() {
    let level = std::env::var("MRREFINE_LOG").unwrap_or_else(|_| "off".into());
    let filter = match level.as_str() {
        "info" => log::LevelFilter::Info,
        "debug" => log::LevelFilter::Debug,
        _ => log::LevelFilter::Off,
    };
    let _ = env_logger::Builder::new().filter_level(filter).target(env_logger::Target::Stderr).try_init();
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Solve {
            scenario,
            plan,
            params,
            out,
        } => {
            let (scene, plan) = load_inputs(&scenario, &plan)?;
            let params = params.to_params();
            check_params(&params)?;
            let report = refine(&scene, &plan, &params);
            if let Outcome::Solved(sol) = &report.outcome {
                write_file(&out, &sol.to_json())?;
            }
            let _ = writeln!(stdout, "{}", report.summary_json());
            Ok(match report.outcome {
                Outcome::Solved(_) => EXIT_OK,
                _ => EXIT_PLANNER,
            })
        }
        Command::Validate {
            scenario,
            plan,
            solution,
        } => {
            let (scene, plan) = load_inputs(&scenario, &plan)?;
            let sol = Solution::from_json(&read(&solution)?).map_err(|e| input_error(format!("{}: {e}", solution.display())))?;
            let prec = final_orderings(&plan, &sol.induced).map_err(|e| input_error(format!("induced orderings: {e}")))?;
            let report = validate_solution(&scene, &plan, &prec, &sol);
            for v in &report.violations {
                let _ = writeln!(stdout, "{v}");
            }
            let _ = writeln!(stdout, "{} violation(s)", report.violations.len());
            Ok(if report.is_clean() { EXIT_OK } else { EXIT_INPUT })
        }
        Command::Bench {
            scenario,
            plan,
            seeds,
            jobs,
            out,
            params,
        } => {
            let (scene, plan) = load_inputs(&scenario, &plan)?;
            let base = params.to_params();
            check_params(&base)?;
            let modes: Vec<Mode> = params.mode.map_or_else(|| Mode::ALL.to_vec(), |m| vec![m]);
            if let Some(dir) = &out {
                fs::create_dir_all(dir).map_err(|e| input_error(format!("cannot create {}: {e}", dir.display())))?;
            }
            let runs: Vec<PipelineParams> = (0..seeds)
                .flat_map(|s| {
                    modes.iter().map(move |&m| (s, m))
                })
                .map(|(s, m)| PipelineParams {
                    seed: base.seed + s,
                    mode: m,
                    ..base.clone()
                })
                .collect();
            let reports = bench(&scene, &plan, &runs, jobs.max(1));
            let _ = writeln!(stdout, "{}", csv_header());
            for (p, report) in runs.iter().zip(&reports) {
                if let (Some(dir), Outcome::Solved(sol)) = (&out, &report.outcome) {
                    write_file(&dir.join(format!("seed{}_{}.json", p.seed, p.mode)), &sol.to_json())?;
                }
                let _ = writeln!(stdout, "{}", csv_row(p, report));
            }
            Ok(EXIT_OK)
        }
        Command::Render {
            scenario,
            plan,
            solution,
            out,
        } => {
            let (scene, plan) = load_inputs(&scenario, &plan)?;
            let sol = match &solution {
                Some(path) => Some(Solution::from_json(&read(path)?).map_err(|e| input_error(format!("{}: {e}", path.display())))?),
                None => None,
            };
            write_file(&out, &render::render_svg(&scene, &plan, sol.as_ref()))?;
            Ok(EXIT_OK)
        }
    }
}

pub fn csv_header() -> &'static str {
    "seed,mode,outcome,planning_time_s,makespan"
}

pub fn csv_row(p: &PipelineParams, report: &RunReport) -> String {
    let makespan = report.makespan.map(|m| format!("{m:.6}")).unwrap_or_default();
    format!("{},{},{},{:.6},{}", p.seed, p.mode, report.outcome.name(), report.planning_time_s, makespan)
}

/// Runs each parameter set; results keep the input order.
pub fn bench(scene: &Scenario, plan: &TaskPlan, runs: &[PipelineParams], jobs: usize) -> Vec<RunReport> {
    if jobs <= 1 {
        return runs.iter().map(|p| refine(scene, plan, p)).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<RunReport>>> = runs.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some(p) = runs.get(i) else { break };
                let r = refine(scene, plan, p);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every run finished"))
        .collect()
}
