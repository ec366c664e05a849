//! TOML configuration for the CLI and server.
//!
//! ```toml
//! [server]
//! bind = "127.0.0.1:8080"
//! frames_dir = "frames"
//!
//! [provider]
//! endpoint = "https://api.example.com/v1/chat/completions"
//! model = "vision-model"
//! credential_env = "PLANNER_API_KEY"
//!
//! [eval]
//! runs = 10
//! seed = 7
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::compare::{CompareOptions, Jitter};
use super::ConductorError;
use crate::planner_gateway::ProviderConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub bind: String,
    pub frames_dir: PathBuf,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { bind: "127.0.0.1:8080".into(), frames_dir: std::env::temp_dir().join("langarm-frames") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub runs: usize,
    pub seed: u64,
    pub jitter: Jitter,
    /// Phrase-set TOML; the built-in set when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phrases: Option<PathBuf>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let o = CompareOptions::default();
        EvalConfig { runs: o.runs, seed: o.seed, jitter: o.jitter, phrases: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub server: ServerConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provider: Option<ProviderConfig>,
    pub eval: EvalConfig,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConductorError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConductorError::Config(e.to_string()))?;
        if let Some(p) = &cfg.provider {
            p.validate().map_err(|e| ConductorError::Config(e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConductorError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConductorError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Config::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.server.frames_dir.is_relative() {
            cfg.server.frames_dir = base.join(&cfg.server.frames_dir);
        }
        if let Some(p) = cfg.eval.phrases.as_mut().filter(|p| p.is_relative()) {
            *p = base.join(&*p);
        }
        Ok(cfg)
    }

    pub fn compare_options(&self) -> CompareOptions {
        CompareOptions { runs: self.eval.runs, seed: self.eval.seed, jitter: self.eval.jitter, ..CompareOptions::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_default() {
        assert_eq!(Config::parse("").unwrap(), Config::default());
    }

    #[test]
    fn provider_section() {
        let c = Config::parse(
            "[provider]\nendpoint = \"http://localhost:9/v1\"\nmodel = \"m\"\ncredential_env = \"K\"\n[eval]\nruns = 3\n",
        )
        .unwrap();
        assert_eq!(c.provider.unwrap().max_retries, 2);
        assert_eq!(c.eval.runs, 3);
        assert_eq!(c.eval.seed, 7);
        assert!(Config::parse("[server]\nbind = 5\n").is_err());
    }
}
