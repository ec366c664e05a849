use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Classification, GatewayError, PlannerResponse};
use crate::pattern_dsl::PatternBlock;
use crate::prompt_forge::assets::sha256_hex;

/// One planner exchange. Field order is the on-disk order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub timestamp: String,
    pub checksum: String,
    pub prompt: String,
    #[serde(default)]
    pub images: Vec<String>,
    pub raw_response: String,
    pub classification: Classification,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trailing_blocks: Vec<PatternBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub latency_s: f64,
    /// Free-form origin tag, e.g. `mock` or a model id.
    #[serde(default)]
    pub source: String,
}

impl TranscriptRecord {
    pub fn new(prompt: &str, images: Vec<String>, resp: &PlannerResponse, latency_s: f64, source: &str) -> Self {
        TranscriptRecord {
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            checksum: sha256_hex(prompt),
            prompt: prompt.to_string(),
            images,
            raw_response: resp.raw_text.clone(),
            classification: resp.classified.clone(),
            trailing_blocks: resp.trailing_blocks.clone(),
            warnings: resp.warnings.clone(),
            latency_s,
            source: source.to_string(),
        }
    }

    pub fn response(&self) -> PlannerResponse {
        PlannerResponse {
            raw_text: self.raw_response.clone(),
            classified: self.classification.clone(),
            trailing_blocks: self.trailing_blocks.clone(),
            warnings: self.warnings.clone(),
        }
    }
}

/// Append-only line-delimited transcript store, optionally file-backed.
#[derive(Debug, Clone, Default)]
pub struct TranscriptStore {
    path: Option<PathBuf>,
    records: Vec<TranscriptRecord>,
}

impl TranscriptStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or starts) a store at `path`, loading existing records.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref().to_path_buf();
        let records = if path.exists() { Self::parse(&std::fs::read_to_string(&path)?)? } else { Vec::new() };
        Ok(TranscriptStore { path: Some(path), records })
    }

    pub fn parse(text: &str) -> Result<Vec<TranscriptRecord>, GatewayError> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let r: TranscriptRecord =
                serde_json::from_str(line).map_err(|e| GatewayError::Transcript(format!("line {}: {e}", i + 1)))?;
            if sha256_hex(&r.prompt) != r.checksum {
                return Err(GatewayError::Transcript(format!("line {}: checksum does not match prompt", i + 1)));
            }
            out.push(r);
        }
        Ok(out)
    }

    pub fn records(&self) -> &[TranscriptRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&mut self, r: TranscriptRecord) -> Result<(), GatewayError> {
        if let Some(p) = &self.path {
            let mut f = OpenOptions::new().create(true).append(true).open(p)?;
            let line = serde_json::to_string(&r).map_err(|e| GatewayError::Transcript(e.to_string()))?;
            writeln!(f, "{line}")?;
        }
        self.records.push(r);
        Ok(())
    }

    /// The most recent record for `checksum`.
    pub fn lookup(&self, checksum: &str) -> Result<&TranscriptRecord, GatewayError> {
        self.records
            .iter()
            .rev()
            .find(|r| r.checksum == checksum)
            .ok_or_else(|| GatewayError::NotRecorded(checksum.to_string()))
    }

    pub fn replay(&self, checksum: &str) -> Result<PlannerResponse, GatewayError> {
        self.lookup(checksum).map(TranscriptRecord::response)
    }

    pub fn to_jsonl(&self) -> String {
        self.records.iter().map(|r| serde_json::to_string(r).expect("records serialize") + "\n").collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner_gateway::{parse_response, Expect};

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let mut s = TranscriptStore::open(&path).unwrap();
        let resp = parse_response("X: [1]*3\nY: [0]*3\nZ: [0]*3\nG: [0]*3", Expect::Any, 50);
        let rec = TranscriptRecord::new("prompt text", vec![], &resp, 0.25, "mock");
        let sum = rec.checksum.clone();
        s.record(rec).unwrap();
        assert_eq!(s.replay(&sum).unwrap(), resp);
        let reopened = TranscriptStore::open(&path).unwrap();
        assert_eq!(reopened.replay(&sum).unwrap(), resp);
        assert_eq!(reopened.to_jsonl(), std::fs::read_to_string(&path).unwrap());
        assert!(matches!(s.replay("nope"), Err(GatewayError::NotRecorded(_))));
    }

    #[test]
    fn tampered_prompt_rejected() {
        let resp = parse_response("", Expect::Any, 50);
        let mut rec = TranscriptRecord::new("a", vec![], &resp, 0.0, "mock");
        rec.prompt = "b".into();
        let line = serde_json::to_string(&rec).unwrap();
        assert!(TranscriptStore::parse(&line).is_err());
    }
}
