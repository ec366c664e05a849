//! Command-line entry points shared by the `langarm` binary.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use super::compare::{compare_strategies, record_corpus, Comparison, PhraseSet};
use super::config::Config;
use super::eval::{run_task, RunEnv};
use super::session::{parse_views, SessionManager};
use super::task::{PlannerSpec, Strategy, TaskSpec};
use super::ConductorError;
use crate::geometry::Vec3;
use crate::pattern_dsl::Provenance;
use crate::planner_gateway::MockPlanner;
use crate::robot_model::{parse_urdf, to_mermaid, ReachEnvelope, DEFAULT_SINGULARITY_MARGIN_MM};
use crate::scene_render::frame_stack;
use crate::sentinel::Sentinel;
use crate::world_sim::{load_world, observe};

#[derive(Debug, Parser)]
#[command(name = "langarm", version, about = "Language-to-motion workbench")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run task files once each and print one JSON result per line.
    Run(RunArgs),
    /// Compare baseline and improved strategies over jittered runs.
    Compare(CompareArgs),
    /// Re-run a comparison from a recorded transcript corpus.
    Replay(ReplayArgs),
    /// Render a world, optionally after executing a command.
    Render(RenderArgs),
    /// Inspect a URDF file.
    Urdf(UrdfArgs),
    /// Serve the session API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub tasks: Vec<PathBuf>,
    /// Override the task strategy.
    #[arg(long)]
    pub strategy: Option<Strategy>,
    /// `mock`, `remote` or `replay=<corpus.jsonl>`.
    #[arg(long, value_parser = parse_planner)]
    pub planner: Option<PlannerSpec>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub tasks: Vec<PathBuf>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Phrase-set TOML.
    #[arg(long)]
    pub phrases: Option<PathBuf>,
    /// Disable placement jitter.
    #[arg(long)]
    pub no_jitter: bool,
    /// Write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Use the remote provider from the config.
    #[arg(long)]
    pub remote: bool,
    /// Record a mock-planner corpus here instead of comparing live.
    #[arg(long, requires = "csv")]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Transcript corpus (JSONL).
    pub corpus: PathBuf,
    pub tasks: Vec<PathBuf>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub phrases: Option<PathBuf>,
    /// Stored metrics CSV to check the replayed table against.
    #[arg(long)]
    pub expect: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// World JSON.
    pub world: PathBuf,
    #[arg(long, default_value = "top,front,side")]
    pub views: String,
    #[arg(long, default_value = "frames")]
    pub out: PathBuf,
    /// Command executed with the mock planner before rendering.
    #[arg(long)]
    pub command: Option<String>,
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    #[arg(long, default_value = "png")]
    pub ext: String,
}

#[derive(Debug, Args)]
pub struct UrdfArgs {
    pub file: PathBuf,
    /// Print the Mermaid graph instead of the summary.
    #[arg(long)]
    pub mermaid: bool,
    /// Check reachability of `x,y,z` in mm from a base at the origin.
    #[arg(long, value_parser = parse_vec3)]
    pub reach: Option<Vec3>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub bind: Option<String>,
    #[arg(long)]
    pub frames_dir: Option<PathBuf>,
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err("expected x,y,z".into()),
    }
}

fn parse_planner(s: &str) -> Result<PlannerSpec, String> {
    match s {
        "mock" => Ok(PlannerSpec::Mock),
        "remote" => Ok(PlannerSpec::Remote),
        _ => match s.strip_prefix("replay=") {
            Some(p) if !p.is_empty() => std::path::absolute(p).map(PlannerSpec::Replay).map_err(|e| e.to_string()),
            _ => Err("expected mock, remote or replay=<corpus>".into()),
        },
    }
}

fn load_tasks(paths: &[PathBuf]) -> Result<Vec<TaskSpec>, ConductorError> {
    if paths.is_empty() {
        return Err(ConductorError::Task("no task files given".into()));
    }
    paths.iter().map(TaskSpec::load).collect()
}

fn phrases(path: Option<&Path>) -> Result<PhraseSet, ConductorError> {
    match path {
        Some(p) => PhraseSet::load(p),
        None => Ok(PhraseSet::builtin()),
    }
}

fn env_for(cfg: &Config, remote: bool) -> Result<RunEnv, ConductorError> {
    match (&cfg.provider, remote) {
        (Some(p), true) => Ok(RunEnv::default().with_provider(p.clone())),
        (None, true) => Err(ConductorError::PlannerUnavailable("--remote needs a [provider] section".into())),
        _ => Ok(RunEnv::default()),
    }
}

/// Runs a parsed command line. `Ok(true)` when every run succeeded.
pub fn execute(cli: Cli) -> Result<bool, ConductorError> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Run(a) => {
            let env = env_for(&cfg, a.planner == Some(PlannerSpec::Remote))?;
            let mut ok = true;
            for mut spec in load_tasks(&a.tasks)? {
                if let Some(s) = a.strategy {
                    spec.strategy = s;
                }
                if let Some(p) = &a.planner {
                    spec.planner = p.clone();
                }
                let r = run_task(&spec, &env)?;
                ok &= r.success;
                let line = serde_json::json!({
                    "task": r.task_id, "strategy": r.strategy, "success": r.success,
                    "outcome": r.outcome, "reason": r.reason, "final_error_m": r.final_error_m,
                    "collisions": r.collision_count, "steps": r.steps, "generation_time_s": r.generation_time_s,
                    "observation": observe(&r.final_state).to_string(),
                });
                println!("{line}");
            }
            Ok(ok)
        }
        Command::Compare(a) => {
            let specs = load_tasks(&a.tasks)?;
            let set = phrases(a.phrases.as_deref().or(cfg.eval.phrases.as_deref()))?;
            let mut opts = cfg.compare_options();
            opts.runs = a.runs.unwrap_or(opts.runs);
            opts.seed = a.seed.unwrap_or(opts.seed);
            if a.no_jitter {
                opts.jitter = super::compare::Jitter::NONE;
            }
            let cmp = match (&a.record, &a.csv) {
                (Some(corpus), Some(csv)) => record_corpus(&specs, &set, &opts, corpus, csv)?,
                _ => {
                    if a.remote {
                        opts.planner = Some(PlannerSpec::Remote);
                    }
                    let cmp = compare_strategies(&specs, &set, &opts, &env_for(&cfg, a.remote)?)?;
                    if let Some(csv) = &a.csv {
                        std::fs::write(csv, cmp.to_csv()?)?;
                    }
                    cmp
                }
            };
            print!("{}", cmp.render_table());
            Ok(cmp.results.iter().all(|r| r.outcome != "invalid_pattern"))
        }
        Command::Replay(a) => {
            let specs = load_tasks(&a.tasks)?;
            let set = phrases(a.phrases.as_deref().or(cfg.eval.phrases.as_deref()))?;
            let mut opts = cfg.compare_options();
            opts.runs = a.runs.unwrap_or(opts.runs);
            opts.seed = a.seed.unwrap_or(opts.seed);
            opts.planner = Some(PlannerSpec::Replay(std::path::absolute(&a.corpus)?));
            let cmp = compare_strategies(&specs, &set, &opts, &RunEnv::default())?;
            print!("{}", cmp.render_table());
            match &a.expect {
                Some(p) => {
                    let stored = Comparison::read_csv(&std::fs::read_to_string(p)?)?;
                    let same = stored.len() == cmp.rows.len()
                        && stored.iter().zip(&cmp.rows).all(|(s, r)| {
                            s.task == r.task
                                && s.strategy == r.strategy
                                && (s.mean_error_m - r.mean_error_m).abs() < 1e-9
                                && (s.success_rate - r.success_rate).abs() < 1e-9
                                && (s.mean_time_s - r.mean_time_s).abs() < 1e-9
                        });
                    println!("replay matches stored metrics: {same}");
                    Ok(same)
                }
                None => Ok(true),
            }
        }
        Command::Render(a) => {
            let (world, _) = load_world(&a.world).map_err(|e| ConductorError::WorldLoad(e.to_string()))?;
            let views = parse_views(&a.views)?;
            let mut history = vec![world.clone()];
            let mut ok = true;
            if let Some(cmd) = &a.command {
                let plan = MockPlanner::default().plan(cmd, &world);
                let ex = super::eval::execute_response(&world, &plan.response, &Sentinel::default(), Provenance::MockPlanner);
                ok = ex.outcome == "executed";
                if !ok {
                    eprintln!("{}: {}", ex.outcome, ex.reason.unwrap_or_default());
                }
                history = ex.states;
            }
            let stack = frame_stack(&history, a.stride, &views).map_err(|e| ConductorError::Render(e.to_string()))?;
            let m = stack.write(&a.out, &a.ext).map_err(|e| ConductorError::Render(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&m).expect("manifest serializes"));
            Ok(ok)
        }
        Command::Urdf(a) => {
            let xml = std::fs::read_to_string(&a.file)?;
            let model = parse_urdf(&xml).map_err(|e| ConductorError::Task(e.to_string()))?;
            if a.mermaid {
                print!("{}", to_mermaid(&model));
            } else {
                println!("{}", model.structure_summary());
            }
            match a.reach {
                Some(t) => {
                    let env = ReachEnvelope::from_model(&model, Vec3::ZERO, DEFAULT_SINGULARITY_MARGIN_MM);
                    let v = env.check(t);
                    println!("{}", serde_json::json!({ "max_radius_mm": env.max_radius, "reach": v }));
                    Ok(!matches!(v, crate::robot_model::ReachVerdict::OutOfReach(_)))
                }
                None => Ok(true),
            }
        }
        Command::Serve(a) => {
            let bind = a.bind.unwrap_or(cfg.server.bind.clone());
            let frames = a.frames_dir.unwrap_or(cfg.server.frames_dir.clone());
            let manager = Arc::new(SessionManager::new(cfg.provider.clone(), frames));
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(super::server::serve(manager, &bind))?;
            Ok(true)
        }
    }
}

/// Parses `std::env::args`, runs, and maps the result to an exit code.
pub fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => std::process::ExitCode::SUCCESS,
        Ok(false) => std::process::ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::from(2)
        }
    }
}
