//! Task runs, strategy comparisons, replay and interactive sessions.
//!
//! ```
//! use langarm::conductor::{run_task, RunEnv, TaskSpec};
//!
//! let spec: TaskSpec = serde_json::from_str(r#"{
//!     "id": "demo",
//!     "command": "Move right for 70mm",
//!     "world": { "objects": [] },
//!     "goal": { "kind": "ee_at", "target": [70, 0, 0] }
//! }"#).unwrap();
//! let r = run_task(&spec, &RunEnv::default()).unwrap();
//! assert!(r.success);
//! ```

pub mod cli;
mod compare;
mod config;
mod eval;
mod server;
mod session;
mod task;

use crate::planner_gateway::GatewayError;

pub use compare::{
    compare_strategies, record_corpus, CompareOptions, Comparison, ComparisonRow, Jitter, PhraseList, PhraseSet,
    ReferenceRow, REFERENCE_TABLE,
};
pub use config::{Config, EvalConfig, ServerConfig};
pub use eval::{execute_response, prompt_for, prompt_images, run_task, run_variant, EvalResult, PlanExecution, RunEnv};
pub use server::{router, serve};
pub use session::{
    parse_views, CommandOutcome, CreateSession, FeedEvent, PlannerKind, Session, SessionManager, StateView, STEP_BATCH,
};
pub use task::{Goal, PlannerSpec, Strategy, TaskSpec, WorldSource};

#[derive(Debug, thiserror::Error)]
pub enum ConductorError {
    #[error("task: {0}")]
    Task(String),
    #[error("world: {0}")]
    WorldLoad(String),
    #[error("planner unavailable: {0}")]
    PlannerUnavailable(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("render: {0}")]
    Render(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
