//! Planner access: a remote chat-completion client, a rule-based mock planner
//! with the same contract, reply classification and transcript record/replay.
//!
//! ```
//! use langarm::planner_gateway::{mock_plan, Classification};
//! use langarm::world_sim::WorldState;
//! use langarm::geometry::Vec3;
//!
//! let world = WorldState::new(Vec3::ZERO, vec![], vec![]).unwrap();
//! let resp = mock_plan("Move right for 70mm", &world, None);
//! assert!(matches!(resp.classified, Classification::Pattern { .. }));
//! ```

mod classify;
mod mock;
mod remote;
mod transcript;

use thiserror::Error;

pub use classify::{extract_blocks, parse_response, refusal_cues, Classification, Expect, PlannerResponse};
pub use mock::{mock_plan, Intent, MockPlan, MockPlanner};
pub use remote::{
    complete, complete_with, encode_image, extract_text, AttemptError, ChatRequest, ChatTransport, EncodedImage,
    HttpTransport, ProviderConfig,
};
pub use transcript::{TranscriptRecord, TranscriptStore};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("request timed out")]
    Timeout,
    #[error("rate limited (retry after {retry_after_s:?} s)")]
    RateLimited { retry_after_s: Option<f64> },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("unexpected response: {0}")]
    BadResponse(String),
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
    #[error("image attachment: {0}")]
    Image(String),
    #[error("no transcript recorded for checksum {0}")]
    NotRecorded(String),
    #[error("transcript store: {0}")]
    Transcript(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
