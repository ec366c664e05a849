use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::task::{PlannerSpec, Strategy, TaskSpec};
use super::ConductorError;
use crate::pattern_dsl::{expand, Provenance};
use crate::planner_gateway::{
    complete, Classification, Expect, MockPlanner, PlannerResponse, ProviderConfig, TranscriptRecord, TranscriptStore,
};
use crate::prompt_forge::{build, BuildInputs, ImageRef, Level, PromptBundle};
use crate::robot_model::{parse_urdf, RobotModel};
use crate::scene_render::{render_view, Viewpoint};
use crate::sentinel::{Sentinel, Verdict};
use crate::geometry::Vec3;
use crate::world_sim::{execute, execute_states, SimEvent, WorldState};

/// Shared resources for task runs.
#[derive(Debug, Default)]
pub struct RunEnv {
    pub provider: Option<ProviderConfig>,
    /// When set, every planner exchange is appended here.
    pub recorder: Option<Arc<Mutex<TranscriptStore>>>,
    corpora: Mutex<BTreeMap<PathBuf, Arc<TranscriptStore>>>,
}

impl RunEnv {
    pub fn with_provider(mut self, p: ProviderConfig) -> Self {
        self.provider = Some(p);
        self
    }

    pub fn recording_to(mut self, store: TranscriptStore) -> Self {
        self.recorder = Some(Arc::new(Mutex::new(store)));
        self
    }

    fn corpus(&self, path: &Path) -> Result<Arc<TranscriptStore>, ConductorError> {
        let mut cache = self.corpora.lock().expect("corpus cache");
        if let Some(s) = cache.get(path) {
            return Ok(s.clone());
        }
        if !path.exists() {
            return Err(ConductorError::PlannerUnavailable(format!("corpus {} not found", path.display())));
        }
        let store = Arc::new(TranscriptStore::open(path)?);
        cache.insert(path.to_path_buf(), store.clone());
        Ok(store)
    }
}

/// Result of one scored run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub task_id: String,
    pub strategy: Strategy,
    pub command: String,
    pub planner: String,
    pub generation_time_s: f64,
    pub final_error_m: f64,
    pub success: bool,
    pub collision_count: usize,
    /// `executed`, `rejected`, `refusal`, `clarification`, `unparseable` or
    /// `invalid_pattern`.
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub steps: usize,
    pub blocks: usize,
    pub verdicts: Vec<Verdict>,
    pub final_state: WorldState,
}

/// Outcome of running a planner response against a world.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanExecution {
    pub outcome: String,
    pub reason: Option<String>,
    pub final_state: WorldState,
    /// Every intermediate state, starting with the input world.
    pub states: Vec<WorldState>,
    pub events: Vec<SimEvent>,
    pub verdicts: Vec<Verdict>,
    pub rejected: Option<Verdict>,
    pub steps: usize,
    pub blocks: usize,
}

impl PlanExecution {
    pub fn collision_count(&self) -> usize {
        self.events.iter().filter(|e| e.is_collision()).count()
    }
}

/// Executes the response's blocks in order, re-checking each one against
/// the sentinel on the world it will actually start from.
pub fn execute_response(world: &WorldState, resp: &PlannerResponse, sentinel: &Sentinel, provenance: Provenance) -> PlanExecution {
    let mut ex = PlanExecution {
        outcome: resp.classified.kind().to_string(),
        reason: None,
        final_state: world.clone(),
        states: vec![world.clone()],
        events: Vec::new(),
        verdicts: Vec::new(),
        rejected: None,
        steps: 0,
        blocks: 0,
    };
    match &resp.classified {
        Classification::Pattern { .. } => {}
        Classification::Refusal { reason } => {
            ex.reason = Some(reason.clone());
            return ex;
        }
        Classification::Clarification { question } => {
            ex.reason = Some(question.clone());
            return ex;
        }
        Classification::Verdict { summary, reason } => {
            ex.reason = Some(format!("{summary} {reason}"));
            return ex;
        }
        Classification::Unparseable => {
            ex.reason = Some("no control pattern found in the reply".into());
            return ex;
        }
    }
    ex.outcome = "executed".into();
    for block in resp.blocks() {
        let traj = match expand(block) {
            Ok(t) => t.with_provenance(provenance),
            Err(e) => {
                ex.outcome = "invalid_pattern".into();
                ex.reason = Some(e.to_string());
                break;
            }
        };
        let checks = sentinel.check_trajectory(&ex.final_state, &traj);
        if let Some(r) = checks.iter().find(|v| v.is_reject()) {
            ex.outcome = "rejected".into();
            ex.reason = Some(r.detail.clone());
            ex.rejected = Some(r.clone());
            ex.verdicts.extend(checks);
            break;
        }
        ex.verdicts.extend(checks);
        let run = execute(&ex.final_state, &traj, None);
        let mut states = execute_states(&ex.final_state, &traj);
        states.remove(0);
        ex.states.extend(states);
        ex.events.extend(run.events);
        ex.final_state = run.final_state;
        ex.steps += traj.len();
        ex.blocks += 1;
    }
    ex
}

/// Top and side renders of `world` written under `dir`, for image-bearing
/// prompt levels.
pub fn prompt_images(world: &WorldState, dir: &Path) -> Result<Vec<ImageRef>, ConductorError> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for (label, view) in [("top view", Viewpoint::top()), ("side view", Viewpoint::side())] {
        let raster = render_view(world, &view).map_err(|e| ConductorError::Render(e.to_string()))?;
        let path = dir.join(format!("{}.png", label.replace(' ', "_")));
        raster.save(&path).map_err(|e| ConductorError::Render(e.to_string()))?;
        out.push(ImageRef { path: path.to_string_lossy().into_owned(), label: Some(label.to_string()) });
    }
    Ok(out)
}

pub fn prompt_for(
    level: Level,
    command: &str,
    world: &WorldState,
    robot: Option<&RobotModel>,
    strategy: Strategy,
    image_dir: &Path,
) -> Result<PromptBundle, ConductorError> {
    let images = if matches!(level, Level::C | Level::D) { prompt_images(world, image_dir)? } else { Vec::new() };
    let inputs = BuildInputs { world: Some(world), images: &images, robot, constraints: &[], examples: strategy.examples() };
    build(level, command, &inputs).map_err(|e| ConductorError::Task(e.to_string()))
}

pub(crate) fn load_robot(spec: &TaskSpec) -> Result<Option<RobotModel>, ConductorError> {
    match &spec.robot {
        None => Ok(None),
        Some(p) => {
            let path = spec.resolve(p);
            let xml = std::fs::read_to_string(&path).map_err(|e| ConductorError::Task(format!("{}: {e}", path.display())))?;
            parse_urdf(&xml).map(Some).map_err(|e| ConductorError::Task(format!("{}: {e}", path.display())))
        }
    }
}

/// Runs a task with its own command and world.
pub fn run_task(spec: &TaskSpec, env: &RunEnv) -> Result<EvalResult, ConductorError> {
    let world = spec.world_def()?.build().map_err(|e| ConductorError::WorldLoad(e.to_string()))?;
    run_variant(spec, &spec.command, &world, spec.strategy, env)
}

/// Runs `spec` with a substituted command, world and strategy.
pub fn run_variant(
    spec: &TaskSpec,
    command: &str,
    world: &WorldState,
    strategy: Strategy,
    env: &RunEnv,
) -> Result<EvalResult, ConductorError> {
    spec.goal.validate(world)?;
    let robot = load_robot(spec)?;
    let mut sentinel = Sentinel::default();
    if let Some(r) = &robot {
        sentinel = sentinel.with_robot(r, Vec3::ZERO);
    }
    let image_dir = spec.base_dir.join("frames").join(&spec.id);
    let bundle = || prompt_for(spec.level, command, world, robot.as_ref(), strategy, &image_dir);

    let (resp, gen_time, provenance, planner) = match &spec.planner {
        PlannerSpec::Mock => {
            let planner = MockPlanner { sentinel: sentinel.clone(), ..MockPlanner::default() }.with_grammar(strategy.grammar());
            let t0 = Instant::now();
            let resp = planner.plan(command, world).response;
            let dt = t0.elapsed().as_secs_f64();
            if let Some(rec) = &env.recorder {
                let b = bundle()?;
                let r = TranscriptRecord::new(&b.rendered, image_paths(&b), &resp, dt, "mock");
                rec.lock().expect("recorder").record(r)?;
            }
            (resp, dt, Provenance::MockPlanner, "mock".to_string())
        }
        PlannerSpec::Remote => {
            let cfg = env
                .provider
                .as_ref()
                .ok_or_else(|| ConductorError::PlannerUnavailable("no provider configured".into()))?;
            let b = bundle()?;
            let (resp, dt) = complete(cfg, &b, Expect::Pattern)?;
            if let Some(rec) = &env.recorder {
                let r = TranscriptRecord::new(&b.rendered, image_paths(&b), &resp, dt, "remote");
                rec.lock().expect("recorder").record(r)?;
            }
            (resp, dt, Provenance::RemotePlanner, "remote".to_string())
        }
        PlannerSpec::Replay(path) => {
            let store = env.corpus(&spec.resolve(path))?;
            let b = bundle()?;
            let rec = store.lookup(&b.checksum())?;
            let prov = if rec.source == "remote" { Provenance::RemotePlanner } else { Provenance::MockPlanner };
            (rec.response(), rec.latency_s, prov, "replay".to_string())
        }
    };

    let ex = execute_response(world, &resp, &sentinel, provenance);
    let collisions = ex.collision_count();
    let success = ex.outcome == "executed" && collisions == 0 && spec.goal.holds(&ex.final_state);
    Ok(EvalResult {
        task_id: spec.id.clone(),
        strategy,
        command: command.to_string(),
        planner,
        generation_time_s: gen_time,
        final_error_m: spec.goal.error_mm(&ex.final_state) / 1000.0,
        success,
        collision_count: collisions,
        outcome: ex.outcome,
        reason: ex.reason,
        steps: ex.steps,
        blocks: ex.blocks,
        verdicts: ex.verdicts,
        final_state: ex.final_state,
    })
}

fn image_paths(b: &PromptBundle) -> Vec<String> {
    b.images().map(|i| i.path.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conductor::task::{Goal, WorldSource};
    use crate::world_sim::{ObjectSpec, WorldDef};

    fn spec(command: &str, goal: Goal) -> TaskSpec {
        let w = WorldState::new(
            Vec3::new(0.0, 0.0, 40.0),
            vec![ObjectSpec::cube("red", "red", Vec3::new(30.0, 120.0, 15.0), 15.0)],
            vec![],
        )
        .unwrap();
        TaskSpec {
            id: "t".into(),
            command: command.into(),
            world: WorldSource::Inline(Box::new(WorldDef::from_state(&w))),
            goal,
            planner: PlannerSpec::Mock,
            strategy: Strategy::Improved,
            level: Level::B,
            robot: None,
            phrase_set: None,
            base_dir: PathBuf::new(),
        }
    }

    #[test]
    fn mock_grasp_is_exact() {
        let s = spec("Pick the red cube", Goal::Grasped { object: "red".into(), tolerance_mm: 1.0 });
        let r = run_task(&s, &RunEnv::default()).unwrap();
        assert!(r.success, "{r:?}");
        assert_eq!(r.final_error_m, 0.0);
        assert_eq!(s.goal.error_mm(&r.final_state) / 1000.0, r.final_error_m);
    }

    #[test]
    fn zero_length_command() {
        let s = spec("Move up 0 mm", Goal::EeAt { target: Vec3::new(0.0, 0.0, 40.0), tolerance_mm: 1.0 });
        let r = run_task(&s, &RunEnv::default()).unwrap();
        assert!(r.success);
        assert_eq!(r.steps, 0);
        assert_eq!(r.final_error_m, 0.0);
    }

    #[test]
    fn record_then_replay_matches() {
        let s = spec("Grasp the red cube", Goal::Grasped { object: "red".into(), tolerance_mm: 1.0 });
        let env = RunEnv::default().recording_to(TranscriptStore::in_memory());
        let live = run_task(&s, &env).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(&path, env.recorder.as_ref().unwrap().lock().unwrap().to_jsonl()).unwrap();
        let replay = TaskSpec { planner: PlannerSpec::Replay(path), ..s };
        let again = run_task(&replay, &RunEnv::default()).unwrap();
        assert_eq!(again.success, live.success);
        assert_eq!(again.final_error_m, live.final_error_m);
        assert_eq!(again.generation_time_s, live.generation_time_s);
        assert_eq!(again.planner, "replay");
    }

    #[test]
    fn remote_without_provider() {
        let s = TaskSpec { planner: PlannerSpec::Remote, ..spec("Pick the red cube", Goal::EeAt { target: Vec3::ZERO, tolerance_mm: 1.0 }) };
        assert!(matches!(run_task(&s, &RunEnv::default()), Err(ConductorError::PlannerUnavailable(_))));
    }
}
