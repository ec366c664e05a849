use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::pattern_dsl::{parse_block, ParseMode, PatternBlock};
use crate::sentinel::fifty_char;

const REFUSAL_CUES: &str = include_str!("../../assets/gateway/refusal_cues.txt");
const CLARIFICATION_CUES: &str = include_str!("../../assets/gateway/clarification_cues.txt");

fn cue_list(text: &'static str) -> Vec<&'static str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect()
}

static REFUSALS: LazyLock<Vec<&'static str>> = LazyLock::new(|| cue_list(REFUSAL_CUES));
static CLARIFICATIONS: LazyLock<Vec<&'static str>> = LazyLock::new(|| cue_list(CLARIFICATION_CUES));
static PATTERN_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:[Oo]utput:)?\s*([XYZGxyzg])\s*:(.*)$").expect("static regex"));

pub fn refusal_cues() -> &'static [&'static str] {
    &REFUSALS
}

/// What the caller expects the reply to contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expect {
    Pattern,
    Verdict,
    #[default]
    Any,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    Pattern { block: PatternBlock },
    Refusal { reason: String },
    Clarification { question: String },
    Verdict { summary: String, reason: String },
    Unparseable,
}

impl Classification {
    pub fn kind(&self) -> &'static str {
        match self {
            Classification::Pattern { .. } => "pattern",
            Classification::Refusal { .. } => "refusal",
            Classification::Clarification { .. } => "clarification",
            Classification::Verdict { .. } => "verdict",
            Classification::Unparseable => "unparseable",
        }
    }
}

/// A classified planner reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerResponse {
    pub raw_text: String,
    pub classified: Classification,
    /// Further pattern blocks after the first, in reply order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trailing_blocks: Vec<PatternBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PlannerResponse {
    pub fn blocks(&self) -> Vec<&PatternBlock> {
        match &self.classified {
            Classification::Pattern { block } => std::iter::once(block).chain(self.trailing_blocks.iter()).collect(),
            _ => Vec::new(),
        }
    }
}

/// Every labeled four-line block in `text` that parses, in order.
pub fn extract_blocks(text: &str) -> Vec<PatternBlock> {
    let mut out = Vec::new();
    let mut group: Vec<(char, String)> = Vec::new();
    let mut flush = |group: &mut Vec<(char, String)>| {
        if group.len() == 4 {
            let joined: String = group.iter().map(|(l, body)| format!("{l}: {}\n", body.trim())).collect();
            if let Ok(b) = parse_block(&joined, ParseMode::Auto) {
                out.push(b);
            }
        }
        group.clear();
    };
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        match PATTERN_LINE.captures(line) {
            Some(c) => {
                let label = c[1].chars().next().expect("one char").to_ascii_uppercase();
                if group.iter().any(|(l, _)| *l == label) {
                    flush(&mut group);
                }
                group.push((label, c[2].to_string()));
                if group.len() == 4 {
                    flush(&mut group);
                }
            }
            None => flush(&mut group),
        }
    }
    flush(&mut group);
    out
}

fn contains_cue(text: &str, cues: &[&str]) -> bool {
    let lower = text.to_lowercase();
    cues.iter().any(|c| lower.contains(&c.to_lowercase()))
}

/// Classifies a raw reply. Never fails; anything unrecognized is
/// [`Classification::Unparseable`]. `limit` caps verdict line lengths.
pub fn parse_response(raw: &str, expect: Expect, limit: usize) -> PlannerResponse {
    let mut resp = PlannerResponse {
        raw_text: raw.to_string(),
        classified: Classification::Unparseable,
        trailing_blocks: Vec::new(),
        warnings: Vec::new(),
    };
    let text = raw.trim();
    if text.is_empty() {
        return resp;
    }
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();

    if expect == Expect::Verdict {
        if let Some(v) = verdict_pair(&lines, limit, &mut resp.warnings) {
            resp.classified = v;
            return resp;
        }
    }
    if expect != Expect::Verdict {
        let mut blocks = extract_blocks(text).into_iter();
        if let Some(first) = blocks.next() {
            resp.trailing_blocks = blocks.collect();
            if !resp.trailing_blocks.is_empty() {
                resp.warnings.push(format!("{} additional pattern block(s) after the first", resp.trailing_blocks.len()));
            }
            resp.classified = Classification::Pattern { block: first };
            return resp;
        }
    }
    if contains_cue(text, &REFUSALS) {
        resp.classified = Classification::Refusal { reason: text.to_string() };
    } else if contains_cue(text, &CLARIFICATIONS) || text.ends_with('?') {
        resp.classified = Classification::Clarification { question: text.to_string() };
    } else if expect == Expect::Any && lines.len() == 2 && lines.iter().all(|l| l.chars().count() <= limit) {
        resp.classified = verdict_pair(&lines, limit, &mut resp.warnings).expect("two lines");
    }
    resp
}

fn strip_tag<'a>(line: &'a str, tags: &[&str]) -> &'a str {
    for t in tags {
        if line.len() >= t.len() && line[..t.len()].eq_ignore_ascii_case(t) {
            return line[t.len()..].trim_start();
        }
    }
    line
}

fn verdict_pair(lines: &[&str], limit: usize, warnings: &mut Vec<String>) -> Option<Classification> {
    if lines.len() < 2 {
        return None;
    }
    let summary = strip_tag(lines[0], &["output:", "summary:", "verdict:"]);
    let reason = strip_tag(lines[1], &["reason:"]);
    let mut cap = |s: &str, what: &str| {
        if s.chars().count() > limit {
            warnings.push(format!("{what} longer than {limit} characters, truncated"));
            cut(s, limit)
        } else {
            s.to_string()
        }
    };
    let summary = cap(summary, "summary");
    let reason = cap(reason, "reason");
    if lines.len() > 2 {
        warnings.push(format!("{} extra line(s) after the verdict pair ignored", lines.len() - 2));
    }
    Some(Classification::Verdict { summary, reason })
}

fn cut(s: &str, limit: usize) -> String {
    if limit == crate::sentinel::FIFTY_CHAR_LIMIT {
        return fifty_char(s);
    }
    let mut out = String::new();
    for w in s.split_whitespace() {
        let extra = if out.is_empty() { 0 } else { 1 };
        if out.chars().count() + extra + w.chars().count() > limit {
            break;
        }
        if extra == 1 {
            out.push(' ');
        }
        out.push_str(w);
    }
    if out.is_empty() {
        out = s.chars().take(limit).collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern_dsl::expand;

    #[test]
    fn pattern_inside_prose() {
        let raw = "Sure.\nOutput:     X: [1]*70 \n            Y: [0]*70 \n            Z: [0]*70 \n            G: [0]*70\nDone.";
        let r = parse_response(raw, Expect::Any, 50);
        let Classification::Pattern { block } = &r.classified else { panic!("{r:?}") };
        assert_eq!(expand(block).unwrap().len(), 70);
    }

    #[test]
    fn baseline_digits_with_tight_label() {
        let raw = format!("X: {z}\nY:{m}\nZ: {z}\nG: {g}", z = "0".repeat(26), m = "-1".repeat(26), g = format!("{}0", "1".repeat(25)));
        let r = parse_response(&raw, Expect::Pattern, 50);
        assert_eq!(r.classified.kind(), "pattern");
    }

    #[test]
    fn two_blocks_keep_first() {
        let b = "X: [1]*2\nY: [0]*2\nZ: [0]*2\nG: [0]*2";
        let r = parse_response(&format!("First:\n{b}\nSecond:\n{b}\n"), Expect::Any, 50);
        assert_eq!(r.trailing_blocks.len(), 1);
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.blocks().len(), 2);
    }

    #[test]
    fn refusal_and_clarification() {
        let r = parse_response("Placing it there would overlap the blue cube. Therefore, this action is not possible.", Expect::Any, 50);
        assert_eq!(r.classified.kind(), "refusal");
        let r = parse_response("Which cube should I move?", Expect::Any, 50);
        assert_eq!(r.classified.kind(), "clarification");
    }

    #[test]
    fn verdict_pair_lines() {
        let r = parse_response("Collision ahead.\nEE descends, force negative.", Expect::Verdict, 50);
        assert_eq!(
            r.classified,
            Classification::Verdict { summary: "Collision ahead.".into(), reason: "EE descends, force negative.".into() }
        );
        let long = format!("{}\nshort", "word ".repeat(20));
        let r = parse_response(&long, Expect::Verdict, 50);
        let Classification::Verdict { summary, .. } = r.classified else { panic!() };
        assert!(summary.chars().count() <= 50);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn empty_is_unparseable() {
        assert_eq!(parse_response("", Expect::Any, 50).classified, Classification::Unparseable);
        assert_eq!(parse_response("just one line", Expect::Any, 50).classified, Classification::Unparseable);
    }
}
