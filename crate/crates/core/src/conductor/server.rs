//! HTTP + SSE front end over a [`SessionManager`].
//!
//! | method | path | body / query |
//! |---|---|---|
//! | POST | `/sessions` | [`CreateSession`] |
//! | GET | `/sessions` | |
//! | POST | `/sessions/{id}/command` | `{"text": "..."}` |
//! | GET | `/sessions/{id}/state` | |
//! | GET | `/sessions/{id}/frames` | `?stride=10&views=top,side` |
//! | GET | `/sessions/{id}/events` | SSE; `Last-Event-ID` header or `?after=` |

use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine as _;
use futures::stream::{self, Stream};
use serde::Deserialize;
use serde_json::json;
use tokio::sync::broadcast;

use super::session::{parse_views, CreateSession, FeedEvent, SessionManager};
use super::ConductorError;
use crate::planner_gateway::GatewayError;

type Shared = Arc<SessionManager>;

impl IntoResponse for ConductorError {
    fn into_response(self) -> Response {
        let status = match &self {
            ConductorError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ConductorError::Task(_) | ConductorError::WorldLoad(_) | ConductorError::Config(_) => StatusCode::BAD_REQUEST,
            ConductorError::PlannerUnavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            ConductorError::Gateway(GatewayError::Timeout) => StatusCode::GATEWAY_TIMEOUT,
            ConductorError::Gateway(_) => StatusCode::BAD_GATEWAY,
            ConductorError::Render(_) | ConductorError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ConductorError> + Send + 'static,
) -> Result<T, ConductorError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ConductorError::Task(format!("worker failed: {e}")))?
}

async fn create(State(m): State<Shared>, Json(req): Json<CreateSession>) -> Result<Response, ConductorError> {
    let view = blocking(move || m.create(req)).await?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn list(State(m): State<Shared>) -> Json<serde_json::Value> {
    Json(json!({ "sessions": m.ids() }))
}

#[derive(Deserialize)]
struct CommandBody {
    text: String,
}

async fn command(
    State(m): State<Shared>,
    Path(id): Path<String>,
    Json(body): Json<CommandBody>,
) -> Result<Response, ConductorError> {
    let out = blocking(move || m.post_command(&id, &body.text)).await?;
    Ok(Json(out).into_response())
}

async fn state(State(m): State<Shared>, Path(id): Path<String>) -> Result<Response, ConductorError> {
    Ok(Json(m.get_state(&id)?).into_response())
}

#[derive(Deserialize)]
struct FramesQuery {
    stride: Option<usize>,
    views: Option<String>,
}

async fn frames(
    State(m): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<FramesQuery>,
) -> Result<Response, ConductorError> {
    let views = parse_views(q.views.as_deref().unwrap_or("top,side"))?;
    let stride = q.stride.unwrap_or(10);
    let body = blocking(move || {
        let (manifest, dir) = m.get_frames(&id, stride, &views)?;
        let png = std::fs::read(dir.join(&manifest.composite))?;
        Ok(json!({
            "manifest": manifest,
            "dir": dir,
            "composite_png": base64::engine::general_purpose::STANDARD.encode(png),
        }))
    })
    .await?;
    Ok(Json(body).into_response())
}

#[derive(Deserialize)]
struct EventsQuery {
    after: Option<u64>,
}

fn to_sse(ev: &FeedEvent) -> Event {
    Event::default()
        .id(ev.seq.to_string())
        .event(ev.kind.clone())
        .data(serde_json::to_string(ev).expect("feed events serialize"))
}

struct Feed {
    backlog: std::vec::IntoIter<FeedEvent>,
    rx: broadcast::Receiver<FeedEvent>,
    last: u64,
}

fn feed_stream(feed: Feed) -> impl Stream<Item = Result<Event, Infallible>> {
    stream::unfold(feed, |mut f| async move {
        loop {
            let next = match f.backlog.next() {
                Some(ev) => ev,
                None => match f.rx.recv().await {
                    Ok(ev) => ev,
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        tracing::warn!(skipped = n, "event subscriber lagged");
                        continue;
                    }
                    Err(broadcast::error::RecvError::Closed) => return None,
                },
            };
            // the backlog and the live channel can overlap
            if next.seq <= f.last {
                continue;
            }
            f.last = next.seq;
            return Some((Ok(to_sse(&next)), f));
        }
    })
}

async fn events(
    State(m): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
    headers: HeaderMap,
) -> Result<Response, ConductorError> {
    let after = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.trim().parse::<u64>().ok())
        .or(q.after)
        .unwrap_or(0);
    let handle = m.session(&id)?;
    let (backlog, rx) = handle.lock().expect("session").subscribe(after);
    let feed = Feed { backlog: backlog.into_iter(), rx, last: after };
    Ok(Sse::new(feed_stream(feed)).keep_alive(KeepAlive::default()).into_response())
}

pub fn router(manager: Arc<SessionManager>) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}/command", post(command))
        .route("/sessions/{id}/state", get(state))
        .route("/sessions/{id}/frames", get(frames))
        .route("/sessions/{id}/events", get(events))
        .with_state(manager)
}

/// Binds `addr` and serves until the process exits.
pub async fn serve(manager: Arc<SessionManager>, addr: &str) -> Result<(), ConductorError> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(manager)).await?;
    Ok(())
}
