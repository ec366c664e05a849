use std::time::{Duration, Instant};

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{parse_response, Expect, GatewayError, PlannerResponse};
use crate::prompt_forge::{ImageRef, PromptBundle};
use crate::scene_render::Raster;

/// Remote chat-completion endpoint settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub credential_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// First backoff delay; doubles per retry.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    #[serde(default = "default_limit")]
    pub verdict_limit: usize,
}

fn default_timeout() -> f64 {
    60.0
}
fn default_retries() -> u32 {
    2
}
fn default_backoff() -> u64 {
    500
}
fn default_limit() -> usize {
    crate::sentinel::FIFTY_CHAR_LIMIT
}

impl ProviderConfig {
    pub fn new(endpoint: &str, model: &str, credential_env: &str) -> Self {
        ProviderConfig {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            credential_env: credential_env.to_string(),
            timeout_s: default_timeout(),
            max_retries: default_retries(),
            backoff_ms: default_backoff(),
            verdict_limit: default_limit(),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(GatewayError::InvalidConfig("timeout_s must be positive".into()));
        }
        if self.endpoint.is_empty() || self.model.is_empty() {
            return Err(GatewayError::InvalidConfig("endpoint and model are required".into()));
        }
        Ok(())
    }

    fn credential(&self) -> Result<String, GatewayError> {
        match std::env::var(&self.credential_env) {
            Ok(k) if !k.trim().is_empty() => Ok(k),
            _ => Err(GatewayError::Auth(format!("environment variable {} is not set", self.credential_env))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedImage {
    pub mime: &'static str,
    pub base64: String,
}

/// A single user turn with optional images.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    pub text: String,
    pub images: Vec<EncodedImage>,
}

impl ChatRequest {
    pub fn to_json(&self) -> Value {
        let mut content = vec![json!({ "type": "text", "text": self.text })];
        for img in &self.images {
            content.push(json!({
                "type": "image_url",
                "image_url": { "url": format!("data:{};base64,{}", img.mime, img.base64) }
            }));
        }
        json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": content }],
            "temperature": 0
        })
    }
}

/// Images go out as PNG; PPM frames are converted.
pub fn encode_image(img: &ImageRef) -> Result<EncodedImage, GatewayError> {
    let bytes = std::fs::read(&img.path).map_err(|e| GatewayError::Image(format!("{}: {e}", img.path)))?;
    let lower = img.path.to_ascii_lowercase();
    let (mime, data) = if lower.ends_with(".ppm") {
        let r = Raster::from_ppm(&bytes).map_err(|e| GatewayError::Image(e.to_string()))?;
        ("image/png", r.to_png().map_err(|e| GatewayError::Image(e.to_string()))?)
    } else if lower.ends_with(".jpg") || lower.ends_with(".jpeg") {
        ("image/jpeg", bytes)
    } else {
        ("image/png", bytes)
    };
    Ok(EncodedImage { mime, base64: base64::engine::general_purpose::STANDARD.encode(data) })
}

/// Failure of a single attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum AttemptError {
    Auth(String),
    RateLimited(Option<f64>),
    Timeout,
    Transport(String),
    Server(u16),
    BadResponse(String),
}

impl AttemptError {
    fn retryable(&self) -> bool {
        matches!(self, AttemptError::RateLimited(_) | AttemptError::Timeout | AttemptError::Transport(_) | AttemptError::Server(_))
    }

    fn into_error(self) -> GatewayError {
        match self {
            AttemptError::Auth(m) => GatewayError::Auth(m),
            AttemptError::RateLimited(r) => GatewayError::RateLimited { retry_after_s: r },
            AttemptError::Timeout => GatewayError::Timeout,
            AttemptError::Transport(m) => GatewayError::Transport(m),
            AttemptError::Server(s) => GatewayError::Transport(format!("server status {s}")),
            AttemptError::BadResponse(m) => GatewayError::BadResponse(m),
        }
    }
}

/// Sends one request and returns the assistant text.
pub trait ChatTransport {
    fn send(&self, req: &ChatRequest, api_key: &str, timeout: Duration) -> Result<String, AttemptError>;
}

/// Blocking HTTP transport speaking the common chat-completions JSON shape.
#[derive(Debug, Clone)]
pub struct HttpTransport {
    pub endpoint: String,
}

impl ChatTransport for HttpTransport {
    fn send(&self, req: &ChatRequest, api_key: &str, timeout: Duration) -> Result<String, AttemptError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| AttemptError::Transport(e.to_string()))?;
        let resp = client
            .post(&self.endpoint)
            .bearer_auth(api_key)
            .json(&req.to_json())
            .send()
            .map_err(|e| if e.is_timeout() { AttemptError::Timeout } else { AttemptError::Transport(e.to_string()) })?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<f64>().ok());
        let body = resp.text().map_err(|e| if e.is_timeout() { AttemptError::Timeout } else { AttemptError::Transport(e.to_string()) })?;
        match status {
            200..=299 => extract_text(&body),
            401 | 403 => Err(AttemptError::Auth(format!("status {status}"))),
            408 => Err(AttemptError::Timeout),
            429 => Err(AttemptError::RateLimited(retry_after)),
            500..=599 => Err(AttemptError::Server(status)),
            _ => Err(AttemptError::BadResponse(format!("status {status}: {}", body.chars().take(200).collect::<String>()))),
        }
    }
}

/// `choices[0].message.content`, either a string or a list of text parts.
pub fn extract_text(body: &str) -> Result<String, AttemptError> {
    let v: Value = serde_json::from_str(body).map_err(|e| AttemptError::BadResponse(e.to_string()))?;
    let content = &v["choices"][0]["message"]["content"];
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts.iter().filter_map(|p| p["text"].as_str()).collect::<Vec<_>>().join("")),
        _ => Err(AttemptError::BadResponse("no choices[0].message.content".into())),
    }
}

/// Sends `bundle` over `transport` with retries and classifies the reply.
/// Returns the response and end-to-end latency in seconds.
pub fn complete_with(
    transport: &dyn ChatTransport,
    config: &ProviderConfig,
    bundle: &PromptBundle,
    expect: Expect,
) -> Result<(PlannerResponse, f64), GatewayError> {
    config.validate()?;
    let key = config.credential()?;
    let images = bundle.images().map(encode_image).collect::<Result<Vec<_>, _>>()?;
    let req = ChatRequest { model: config.model.clone(), text: bundle.rendered.clone(), images };
    let timeout = Duration::from_secs_f64(config.timeout_s);
    let start = Instant::now();
    let mut attempt = 0u32;
    loop {
        match transport.send(&req, &key, timeout) {
            Ok(text) => {
                let resp = parse_response(&text, expect, config.verdict_limit);
                return Ok((resp, start.elapsed().as_secs_f64()));
            }
            Err(e) if e.retryable() && attempt < config.max_retries => {
                let mut wait = Duration::from_millis(config.backoff_ms.saturating_mul(1 << attempt.min(16)));
                if let AttemptError::RateLimited(Some(s)) = e {
                    wait = wait.max(Duration::from_secs_f64(s.clamp(0.0, 60.0)));
                }
                tracing::warn!(attempt, ?e, "planner request failed, retrying in {:?}", wait);
                std::thread::sleep(wait);
                attempt += 1;
            }
            Err(e) => return Err(e.into_error()),
        }
    }
}

pub fn complete(config: &ProviderConfig, bundle: &PromptBundle, expect: Expect) -> Result<(PlannerResponse, f64), GatewayError> {
    complete_with(&HttpTransport { endpoint: config.endpoint.clone() }, config, bundle, expect)
}

#[cfg(test)]
mod tests {
    use std::cell::Cell;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    use super::*;
    use crate::prompt_forge::{build, BuildInputs, Level};

    fn bundle() -> PromptBundle {
        build(Level::A, "Move right for 70mm", &BuildInputs::default()).unwrap()
    }

    fn config(endpoint: &str, env: &str) -> ProviderConfig {
        ProviderConfig { backoff_ms: 1, timeout_s: 5.0, ..ProviderConfig::new(endpoint, "test-model", env) }
    }

    struct Counting<T> {
        inner: T,
        calls: Cell<u32>,
    }

    impl<T: ChatTransport> ChatTransport for Counting<T> {
        fn send(&self, req: &ChatRequest, key: &str, t: Duration) -> Result<String, AttemptError> {
            self.calls.set(self.calls.get() + 1);
            self.inner.send(req, key, t)
        }
    }

    /// Serves `responses` in order, one per connection, on loopback.
    fn serve(responses: Vec<String>) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let h = std::thread::spawn(move || {
            let mut bodies = Vec::new();
            for resp in responses {
                let (mut sock, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(sock.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                bodies.push(String::from_utf8(body).unwrap());
                sock.write_all(resp.as_bytes()).unwrap();
            }
            bodies
        });
        (url, h)
    }

    fn http(status: &str, body: &str) -> String {
        format!("HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len())
    }

    #[test]
    fn pattern_over_loopback() {
        std::env::set_var("LANGARM_TEST_KEY_OK", "k");
        let reply = serde_json::json!({"choices":[{"message":{"content":"X: [1]*70\nY: [0]*70\nZ: [0]*70\nG: [0]*70"}}]});
        let (url, h) = serve(vec![http("500 Internal Server Error", "{}"), http("200 OK", &reply.to_string())]);
        let t = Counting { inner: HttpTransport { endpoint: url.clone() }, calls: Cell::new(0) };
        let (resp, latency) = complete_with(&t, &config(&url, "LANGARM_TEST_KEY_OK"), &bundle(), Expect::Pattern).unwrap();
        assert_eq!(resp.classified.kind(), "pattern");
        assert_eq!(t.calls.get(), 2);
        assert!(latency >= 0.0);
        let bodies = h.join().unwrap();
        let sent: Value = serde_json::from_str(&bodies[1]).unwrap();
        assert_eq!(sent["model"], "test-model");
        assert!(sent["messages"][0]["content"][0]["text"].as_str().unwrap().contains("Move right for 70mm"));
    }

    #[test]
    fn unauthorized_is_not_retried() {
        std::env::set_var("LANGARM_TEST_KEY_401", "expired");
        let (url, h) = serve(vec![http("401 Unauthorized", "{}")]);
        let t = Counting { inner: HttpTransport { endpoint: url.clone() }, calls: Cell::new(0) };
        let err = complete_with(&t, &config(&url, "LANGARM_TEST_KEY_401"), &bundle(), Expect::Any).unwrap_err();
        assert!(matches!(err, GatewayError::Auth(_)), "{err:?}");
        assert_eq!(t.calls.get(), 1);
        h.join().unwrap();
    }

    #[test]
    fn missing_credential() {
        let err = complete(&config("http://127.0.0.1:9/", "LANGARM_TEST_KEY_UNSET_XYZ"), &bundle(), Expect::Any).unwrap_err();
        assert!(matches!(err, GatewayError::Auth(_)));
    }

    #[test]
    fn unreachable_three_attempts() {
        std::env::set_var("LANGARM_TEST_KEY_DOWN", "k");
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/", listener.local_addr().unwrap());
        drop(listener);
        let t = Counting { inner: HttpTransport { endpoint: url.clone() }, calls: Cell::new(0) };
        let err = complete_with(&t, &config(&url, "LANGARM_TEST_KEY_DOWN"), &bundle(), Expect::Any).unwrap_err();
        assert!(matches!(err, GatewayError::Transport(_)), "{err:?}");
        assert_eq!(t.calls.get(), 3);
    }

    #[test]
    fn rate_limit_maps() {
        std::env::set_var("LANGARM_TEST_KEY_429", "k");
        let (url, h) = serve(vec![http("429 Too Many Requests", "{}")]);
        let cfg = ProviderConfig { max_retries: 0, ..config(&url, "LANGARM_TEST_KEY_429") };
        let err = complete(&cfg, &bundle(), Expect::Any).unwrap_err();
        assert!(matches!(err, GatewayError::RateLimited { .. }), "{err:?}");
        h.join().unwrap();
    }

    #[test]
    fn content_parts_joined() {
        let body = r#"{"choices":[{"message":{"content":[{"type":"text","text":"a"},{"type":"text","text":"b"}]}}]}"#;
        assert_eq!(extract_text(body).unwrap(), "ab");
        assert!(extract_text("{}").is_err());
    }
}
