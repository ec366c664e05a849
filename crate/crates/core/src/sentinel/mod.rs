//! Rule-based safety checks over world snapshots and trajectories, with
//! templated verbalization of the results.

mod checks;
mod hazard;
mod sort;
mod verbalize;

use std::collections::BTreeMap;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::robot_model::{ReachEnvelope, RobotModel, DEFAULT_SINGULARITY_MARGIN_MM};

pub use checks::obstruction_between;
pub use hazard::{HazardMatrix, HazardRule};
pub use sort::SortOutcome;
pub use verbalize::{fifty_char, verbalize, VerbalMode, FIFTY_CHAR_LIMIT};

#[derive(Debug, Error)]
pub enum SentinelError {
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("hazard matrix: {0}")]
    Matrix(String),
    #[error("templates: {0}")]
    Templates(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Ok,
    Warn,
    Reject,
}

impl Severity {
    pub fn name(self) -> &'static str {
        match self {
            Severity::Ok => "ok",
            Severity::Warn => "warn",
            Severity::Reject => "reject",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ok" => Some(Severity::Ok),
            "warn" => Some(Severity::Warn),
            "reject" => Some(Severity::Reject),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    Placement,
    Trajectory,
    Obstruction,
    Sorting,
    Reach,
}

/// One safety judgment. `summary`, `reason` and `detail` are rendered from
/// the template named by `template` using `params`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub severity: Severity,
    pub summary: String,
    pub reason: String,
    pub detail: String,
    pub source: CheckId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tick: Option<u64>,
    pub template: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl Verdict {
    pub fn is_reject(&self) -> bool {
        self.severity == Severity::Reject
    }
}

#[derive(Debug, Clone, Deserialize)]
struct Template {
    summary: String,
    reason: String,
    full: String,
}

/// Verdict text templates keyed by verdict kind.
#[derive(Debug, Clone)]
pub struct Templates(BTreeMap<String, Template>);

const DEFAULT_TEMPLATES: &str = include_str!("../../assets/sentinel/templates.toml");
const REQUIRED_TEMPLATES: [&str; 12] = [
    "safe",
    "penetration",
    "hazard",
    "hazard_warn",
    "collision",
    "release_penetration",
    "zone_exit",
    "near_singularity",
    "out_of_reach",
    "obstruction",
    "assignment",
    "unassignable",
];

static BUILTIN: LazyLock<Templates> =
    LazyLock::new(|| Templates::parse(DEFAULT_TEMPLATES).expect("bundled templates are valid"));

impl Templates {
    pub fn parse(text: &str) -> Result<Self, SentinelError> {
        let map: BTreeMap<String, Template> =
            toml::from_str(text).map_err(|e| SentinelError::Templates(e.to_string()))?;
        if let Some(missing) = REQUIRED_TEMPLATES.iter().find(|k| !map.contains_key(**k)) {
            return Err(SentinelError::Templates(format!("missing [{missing}]")));
        }
        Ok(Templates(map))
    }

    pub fn builtin() -> &'static Templates {
        &BUILTIN
    }

    fn make(
        &self,
        key: &str,
        severity: Severity,
        source: CheckId,
        tick: Option<u64>,
        params: BTreeMap<String, String>,
    ) -> Verdict {
        let t = &self.0[key];
        let mut reason = fill(&t.reason, &params);
        if severity == Severity::Reject && reason.trim().is_empty() {
            reason = fill(&t.summary, &params);
        }
        Verdict {
            severity,
            summary: fill(&t.summary, &params),
            reason,
            detail: fill(&t.full, &params),
            source,
            tick,
            template: key.to_string(),
            params,
        }
    }
}

/// Replaces `{name}` with `params[name]`; unknown names are left as is.
pub fn fill(template: &str, params: &BTreeMap<String, String>) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if params.contains_key(&after[..close]) => {
                out.push_str(&params[&after[..close]]);
                rest = &after[close + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

pub(crate) fn params<const N: usize>(pairs: [(&str, String); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Safety checker configured with a hazard matrix, templates and an optional
/// robot reach envelope.
#[derive(Debug, Clone)]
pub struct Sentinel {
    pub matrix: HazardMatrix,
    pub templates: Templates,
    pub reach: Option<ReachEnvelope>,
}

impl Default for Sentinel {
    fn default() -> Self {
        Sentinel { matrix: HazardMatrix::builtin(), templates: Templates::builtin().clone(), reach: None }
    }
}

impl Sentinel {
    pub fn with_matrix(mut self, matrix: HazardMatrix) -> Self {
        self.matrix = matrix;
        self
    }

    pub fn with_robot(mut self, model: &RobotModel, base: Vec3) -> Self {
        self.reach = Some(ReachEnvelope::from_model(model, base, DEFAULT_SINGULARITY_MARGIN_MM));
        self
    }

    pub fn with_envelope(mut self, env: ReachEnvelope) -> Self {
        self.reach = Some(env);
        self
    }
}
