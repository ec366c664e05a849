use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SentinelError, Severity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardRule {
    pub subject: String,
    pub context: String,
    pub verdict: Severity,
    pub rationale: String,
}

/// `(subject attribute, context attribute) → rule`. Attributes compare
/// case-insensitively; missing pairs are `ok`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HazardMatrix {
    rules: BTreeMap<(String, String), HazardRule>,
}

const DEFAULT_MATRIX: &str = include_str!("../../assets/sentinel/hazards.csv");

#[derive(Deserialize)]
struct Row {
    subject: String,
    context: String,
    verdict: String,
    rationale: String,
}

fn key(s: &str) -> String {
    s.trim().to_ascii_lowercase()
}

impl HazardMatrix {
    pub fn builtin() -> Self {
        Self::from_csv(DEFAULT_MATRIX).expect("bundled hazard matrix is valid")
    }

    /// CSV with header `subject,context,verdict,rationale`.
    pub fn from_csv(text: &str) -> Result<Self, SentinelError> {
        let mut m = HazardMatrix::default();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        for row in rdr.deserialize::<Row>() {
            let row = row.map_err(|e| SentinelError::Matrix(e.to_string()))?;
            let verdict = Severity::from_name(&row.verdict)
                .ok_or_else(|| SentinelError::Matrix(format!("bad verdict `{}`", row.verdict)))?;
            m.insert(HazardRule { subject: key(&row.subject), context: key(&row.context), verdict, rationale: row.rationale })?;
        }
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SentinelError> {
        let text = std::fs::read_to_string(path).map_err(|e| SentinelError::Matrix(e.to_string()))?;
        Self::from_csv(&text)
    }

    pub fn insert(&mut self, rule: HazardRule) -> Result<(), SentinelError> {
        let k = (key(&rule.subject), key(&rule.context));
        if self.rules.contains_key(&k) {
            return Err(SentinelError::Matrix(format!("duplicate pair ({}, {})", k.0, k.1)));
        }
        self.rules.insert(k, rule);
        Ok(())
    }

    pub fn lookup(&self, subject: &str, context: &str) -> Option<&HazardRule> {
        self.rules.get(&(key(subject), key(context)))
    }

    pub fn severity(&self, subject: &str, context: &str) -> Severity {
        self.lookup(subject, context).map(|r| r.verdict).unwrap_or(Severity::Ok)
    }

    pub fn rules(&self) -> impl Iterator<Item = &HazardRule> {
        self.rules.values()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}
