use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::broadcast;

use super::eval::{execute_response, prompt_for};
use super::task::Strategy;
use super::ConductorError;
use crate::geometry::Vec3;
use crate::pattern_dsl::Provenance;
use crate::planner_gateway::{complete, Expect, MockPlanner, ProviderConfig};
use crate::prompt_forge::Level;
use crate::robot_model::{parse_urdf, RobotModel};
use crate::scene_render::{frame_stack, StackManifest, ViewKind, Viewpoint};
use crate::sentinel::{verbalize, CheckId, Sentinel, VerbalMode, Verdict};
use crate::world_sim::{object_positions, observe, SimEvent, WorldDef, WorldState};

/// Ticks folded into one `steps` feed event.
pub const STEP_BATCH: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    #[default]
    Mock,
    Remote,
}

fn default_level() -> Level {
    Level::B
}

/// Body of `POST /sessions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub world: WorldDef,
    #[serde(default)]
    pub planner: PlannerKind,
    /// URDF document text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robot_urdf: Option<String>,
    #[serde(default = "default_level")]
    pub level: Level,
    #[serde(default)]
    pub strategy: Strategy,
}

/// One entry of a session's ordered feed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedEvent {
    pub seq: u64,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tick: Option<u64>,
    pub data: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandOutcome {
    pub command: String,
    /// `executed`, `rejected`, `clarification`, `unparseable` or
    /// `invalid_pattern`.
    pub status: String,
    pub response_kind: String,
    pub raw_response: String,
    pub prompt_checksum: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub verdicts: Vec<Verdict>,
    /// Verdict pairs in the 50-character form.
    pub verbalized: Vec<String>,
    pub steps: usize,
    pub events: Vec<SimEvent>,
    pub observation: String,
    pub first_seq: u64,
    pub last_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub id: String,
    pub tick: u64,
    pub world: WorldState,
    pub observation: String,
    pub object_positions: String,
    pub commands: usize,
    pub last_seq: u64,
}

/// A live world lineage with its command history and event feed.
#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub world: WorldState,
    /// Every state since creation, initial world first.
    pub lineage: Vec<WorldState>,
    pub history: Vec<CommandOutcome>,
    pub feed: Vec<FeedEvent>,
    pub robot: Option<RobotModel>,
    pub planner: PlannerKind,
    pub level: Level,
    pub strategy: Strategy,
    next_seq: u64,
    tx: broadcast::Sender<FeedEvent>,
}

impl Session {
    fn emit(&mut self, kind: &str, tick: Option<u64>, data: Value) -> u64 {
        self.next_seq += 1;
        let ev = FeedEvent { seq: self.next_seq, kind: kind.to_string(), tick, data };
        self.feed.push(ev.clone());
        // no receivers is fine
        let _ = self.tx.send(ev);
        self.next_seq
    }

    pub fn last_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn state(&self) -> StateView {
        StateView {
            id: self.id.clone(),
            tick: self.world.tick,
            world: self.world.clone(),
            observation: observe(&self.world).to_string(),
            object_positions: object_positions(&self.world),
            commands: self.history.len(),
            last_seq: self.next_seq,
        }
    }

    /// Feed entries after `seq` plus a receiver for later ones, taken
    /// atomically.
    pub fn subscribe(&self, after: u64) -> (Vec<FeedEvent>, broadcast::Receiver<FeedEvent>) {
        let backlog = self.feed.iter().filter(|e| e.seq > after).cloned().collect();
        (backlog, self.tx.subscribe())
    }

    fn sentinel(&self) -> Sentinel {
        match &self.robot {
            Some(r) => Sentinel::default().with_robot(r, Vec3::ZERO),
            None => Sentinel::default(),
        }
    }
}

/// Owns every session; each session serializes its own commands.
#[derive(Debug)]
pub struct SessionManager {
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    counter: AtomicU64,
    pub provider: Option<ProviderConfig>,
    pub frames_dir: PathBuf,
}

impl Default for SessionManager {
    fn default() -> Self {
        SessionManager::new(None, std::env::temp_dir().join("langarm-frames"))
    }
}

impl SessionManager {
    pub fn new(provider: Option<ProviderConfig>, frames_dir: PathBuf) -> Self {
        SessionManager { sessions: RwLock::new(BTreeMap::new()), counter: AtomicU64::new(0), provider, frames_dir }
    }

    pub fn create(&self, req: CreateSession) -> Result<StateView, ConductorError> {
        let world = req.world.build().map_err(|e| ConductorError::WorldLoad(e.to_string()))?;
        let robot = match &req.robot_urdf {
            Some(xml) => Some(parse_urdf(xml).map_err(|e| ConductorError::Task(e.to_string()))?),
            None => None,
        };
        if req.planner == PlannerKind::Remote && self.provider.is_none() {
            return Err(ConductorError::PlannerUnavailable("no provider configured".into()));
        }
        let id = format!("s{}", self.counter.fetch_add(1, Ordering::SeqCst) + 1);
        let (tx, _) = broadcast::channel(1024);
        let mut s = Session {
            id: id.clone(),
            lineage: vec![world.clone()],
            world,
            history: Vec::new(),
            feed: Vec::new(),
            robot,
            planner: req.planner,
            level: req.level,
            strategy: req.strategy,
            next_seq: 0,
            tx,
        };
        s.emit("session_created", Some(s.world.tick), json!({ "observation": observe(&s.world).to_string() }));
        let view = s.state();
        self.sessions.write().expect("session table").insert(id, Arc::new(Mutex::new(s)));
        Ok(view)
    }

    pub fn ids(&self) -> Vec<String> {
        self.sessions.read().expect("session table").keys().cloned().collect()
    }

    pub fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ConductorError> {
        self.sessions
            .read()
            .expect("session table")
            .get(id)
            .cloned()
            .ok_or_else(|| ConductorError::UnknownSession(id.to_string()))
    }

    pub fn get_state(&self, id: &str) -> Result<StateView, ConductorError> {
        Ok(self.session(id)?.lock().expect("session").state())
    }

    /// prompt → planner → sentinel → execute → verbalize, appended to the
    /// feed. Blocks for remote planners.
    pub fn post_command(&self, id: &str, text: &str) -> Result<CommandOutcome, ConductorError> {
        let handle = self.session(id)?;
        let mut s = handle.lock().expect("session");
        let text = text.trim();
        if text.is_empty() {
            return Err(ConductorError::Task("empty command".into()));
        }
        let image_dir = self.frames_dir.join(&s.id).join("prompt");
        let bundle = prompt_for(s.level, text, &s.world, s.robot.as_ref(), s.strategy, &image_dir)?;
        let tick0 = s.world.tick;
        let first_seq = s.emit("command_accepted", Some(tick0), json!({ "text": text, "checksum": bundle.checksum() }));
        let sentinel = s.sentinel();

        let (resp, mut verdict, provenance) = match s.planner {
            PlannerKind::Mock => {
                let planner = MockPlanner { sentinel: sentinel.clone(), ..MockPlanner::default() }.with_grammar(s.strategy.grammar());
                let plan = planner.plan(text, &s.world);
                let v = plan.verdicts.iter().find(|v| v.is_reject()).cloned();
                (plan.response, v, Provenance::MockPlanner)
            }
            PlannerKind::Remote => {
                let cfg = self.provider.as_ref().ok_or_else(|| ConductorError::PlannerUnavailable("no provider configured".into()))?;
                let (resp, _) = complete(cfg, &bundle, Expect::Pattern)?;
                (resp, None, Provenance::RemotePlanner)
            }
        };

        let start = s.world.clone();
        let ex = execute_response(&start, &resp, &sentinel, provenance);
        if ex.rejected.is_some() {
            verdict = ex.rejected.clone();
        }
        let status = match ex.outcome.as_str() {
            "refusal" => "rejected".to_string(),
            "verdict" => "unparseable".to_string(),
            o => o.to_string(),
        };

        for (chunk_i, chunk) in ex.states[1..].chunks(STEP_BATCH).enumerate() {
            let last = chunk.last().expect("non-empty chunk");
            let from = chunk[0].tick;
            let events: Vec<&SimEvent> = ex.events.iter().filter(|e| e.tick >= from && e.tick <= last.tick).collect();
            s.emit(
                "steps",
                Some(last.tick),
                json!({
                    "batch": chunk_i,
                    "from_tick": from,
                    "to_tick": last.tick,
                    "ee_pos": last.ee_pos,
                    "grasped": last.grasped,
                    "objects": last.objects.iter().map(|o| json!({"id": o.id, "center": o.center})).collect::<Vec<_>>(),
                    "events": events,
                }),
            );
        }

        if status == "executed" && ex.states.len() == 1 {
            s.emit(
                "steps",
                Some(ex.final_state.tick),
                json!({ "batch": 0, "from_tick": ex.final_state.tick, "to_tick": ex.final_state.tick, "ee_pos": ex.final_state.ee_pos, "events": [] }),
            );
        }
        let mut verdicts = ex.verdicts.clone();
        if status == "executed" && verdicts.is_empty() {
            verdicts.push(sentinel.safe(CheckId::Trajectory, format!("execute `{text}`")));
        }
        if let Some(v) = &verdict {
            if !verdicts.contains(v) {
                verdicts.push(v.clone());
            }
        }
        let verbalized: Vec<String> = verdicts.iter().map(|v| verbalize(v, VerbalMode::FiftyChar)).collect();
        for (v, line) in verdicts.iter().zip(&verbalized) {
            s.emit("verdict", v.tick.or(Some(ex.final_state.tick)), json!({ "verdict": v, "text": line }));
        }
        match status.as_str() {
            "rejected" => {
                s.emit("command_rejected", Some(ex.final_state.tick), json!({ "verdict": verdict, "reason": ex.reason }));
            }
            "clarification" | "unparseable" | "invalid_pattern" => {
                s.emit("clarification", Some(ex.final_state.tick), json!({ "status": status, "message": ex.reason }));
            }
            _ => {}
        }

        s.world = ex.final_state.clone();
        s.lineage.extend(ex.states[1..].iter().cloned());
        let observation = observe(&s.world).to_string();
        let tick = s.world.tick;
        let last_seq = s.emit(
            "task_done",
            Some(tick),
            json!({ "status": status, "observation": observation, "steps": ex.steps }),
        );
        let outcome = CommandOutcome {
            command: text.to_string(),
            status,
            response_kind: resp.classified.kind().to_string(),
            raw_response: resp.raw_text.clone(),
            prompt_checksum: bundle.checksum(),
            verdict,
            message: ex.reason.clone(),
            verdicts,
            verbalized,
            steps: ex.steps,
            events: ex.events.clone(),
            observation,
            first_seq,
            last_seq,
        };
        s.history.push(outcome.clone());
        Ok(outcome)
    }

    /// Renders the session lineage as a frame stack under the frames
    /// directory and returns its manifest.
    pub fn get_frames(&self, id: &str, stride: usize, views: &[Viewpoint]) -> Result<(StackManifest, PathBuf), ConductorError> {
        let handle = self.session(id)?;
        let s = handle.lock().expect("session");
        let stack = frame_stack(&s.lineage, stride, views).map_err(|e| ConductorError::Render(e.to_string()))?;
        let dir = self.frames_dir.join(&s.id).join(format!("t{}_s{}", s.world.tick, stride));
        let manifest = stack.write(&dir, "png").map_err(|e| ConductorError::Render(e.to_string()))?;
        Ok((manifest, dir))
    }
}

/// `top,front,side` (or `x:y` axis pairs such as `x:z`) into viewpoints.
pub fn parse_views(text: &str) -> Result<Vec<Viewpoint>, ConductorError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| match name {
            "top" => Ok(Viewpoint::top()),
            "front" => Ok(Viewpoint::front()),
            "side" => Ok(Viewpoint::side()),
            other => {
                let axis = |c: &str| match c {
                    "x" => Some(Vec3::new(1.0, 0.0, 0.0)),
                    "y" => Some(Vec3::new(0.0, 1.0, 0.0)),
                    "z" => Some(Vec3::new(0.0, 0.0, 1.0)),
                    _ => None,
                };
                match other.split_once(':').map(|(u, v)| (axis(u), axis(v))) {
                    Some((Some(u), Some(v))) if u != v => Ok(Viewpoint::new(ViewKind::Custom { u, v })),
                    _ => Err(ConductorError::Task(format!("unknown view `{other}`"))),
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;
    use crate::world_sim::{ObjectSpec, Zone};

    fn zone_world() -> WorldDef {
        let w = WorldState::new(
            Vec3::new(0.0, 0.0, 60.0),
            vec![
                ObjectSpec::cube("red", "red", Vec3::new(-80.0, 60.0, 15.0), 15.0).with_attribute("wood"),
                ObjectSpec::cube("blue", "blue", Vec3::new(80.0, 60.0, 15.0), 15.0).with_attribute("ice"),
            ],
            vec![
                Zone::new("A", "A", Aabb::new(Vec3::new(-60.0, 150.0, 0.0), Vec3::new(60.0, 250.0, 50.0)), ""),
                Zone::new("yellow", "yellow", Aabb::new(Vec3::new(120.0, 150.0, 0.0), Vec3::new(220.0, 250.0, 50.0)), "fire"),
            ],
        )
        .unwrap();
        WorldDef::from_state(&w)
    }

    fn mgr() -> (SessionManager, tempfile::TempDir) {
        let dir = tempfile::tempdir().unwrap();
        (SessionManager::new(None, dir.path().to_path_buf()), dir)
    }

    fn create(m: &SessionManager) -> String {
        m.create(CreateSession {
            world: zone_world(),
            planner: PlannerKind::Mock,
            robot_urdf: None,
            level: Level::B,
            strategy: Strategy::Improved,
        })
        .unwrap()
        .id
    }

    #[test]
    fn zone_command_lands_in_zone() {
        let (m, _d) = mgr();
        let id = create(&m);
        let out = m.post_command(&id, "Grasp the red cube and place it in zone A.").unwrap();
        assert_eq!(out.status, "executed", "{out:?}");
        let st = m.get_state(&id).unwrap();
        let red = st.world.object("red").unwrap().center;
        assert!(st.world.zone("A").unwrap().aabb.contains_point(red));
        assert!(out.verbalized.iter().all(|l| l.lines().all(|x| x.chars().count() <= 50)));
    }

    #[test]
    fn hazard_is_rejected_with_verdict() {
        let (m, _d) = mgr();
        let id = create(&m);
        let out = m.post_command(&id, "Move the red cube to the yellow zone").unwrap();
        assert_eq!(out.status, "rejected");
        assert!(out.verdict.as_ref().is_some_and(Verdict::is_reject));
        let h = m.session(&id).unwrap();
        let feed = &h.lock().unwrap().feed;
        assert!(feed.iter().any(|e| e.kind == "command_rejected"));
    }

    #[test]
    fn feed_is_monotone_and_resumable() {
        let (m, _d) = mgr();
        let id = create(&m);
        m.post_command(&id, "Move up 60mm").unwrap();
        let mid = m.get_state(&id).unwrap().last_seq;
        m.post_command(&id, "Move right").unwrap();
        let h = m.session(&id).unwrap();
        let s = h.lock().unwrap();
        assert!(s.feed.windows(2).all(|w| w[0].seq < w[1].seq));
        let (backlog, _rx) = s.subscribe(mid);
        assert!(backlog.iter().all(|e| e.seq > mid));
        assert_eq!(backlog.first().unwrap().seq, mid + 1);
        assert_eq!(backlog.last().unwrap().kind, "task_done");
    }

    #[test]
    fn frames_and_unknown_session() {
        let (m, _d) = mgr();
        let id = create(&m);
        m.post_command(&id, "Move up 30mm").unwrap();
        let (manifest, dir) = m.get_frames(&id, 10, &parse_views("top,side").unwrap()).unwrap();
        assert_eq!(manifest.ticks, vec![0, 10, 20, 30]);
        assert!(dir.join("stack.png").exists());
        assert!(matches!(m.get_state("nope"), Err(ConductorError::UnknownSession(_))));
        assert!(parse_views("top,q").is_err());
    }
}
