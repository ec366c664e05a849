//! Canonical prompt texts, compiled in.

use sha2::{Digest, Sha256};

pub const BASELINE_PROMPT: &str = include_str!("../../assets/prompts/baseline_prompt.txt");
pub const PERCEPTION_PROMPT: &str = include_str!("../../assets/prompts/perception_prompt.txt");
pub const OUTPUT_DIRECTIVE_50: &str = include_str!("../../assets/prompts/output_directive_50.txt");
pub const EXAMPLES_IMPROVED: &str = include_str!("../../assets/prompts/examples_improved.txt");
pub const EXAMPLES_BASELINE: &str = include_str!("../../assets/prompts/examples_baseline.txt");
pub const MANIFEST: &str = include_str!("../../assets/prompts/MANIFEST.sha256");

/// `(file name, contents)` for every bundled prompt asset.
pub fn all() -> [(&'static str, &'static str); 5] {
    [
        ("baseline_prompt.txt", BASELINE_PROMPT),
        ("perception_prompt.txt", PERCEPTION_PROMPT),
        ("examples_baseline.txt", EXAMPLES_BASELINE),
        ("examples_improved.txt", EXAMPLES_IMPROVED),
        ("output_directive_50.txt", OUTPUT_DIRECTIVE_50),
    ]
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Names of assets whose digest differs from the manifest.
pub fn verify_manifest() -> Vec<String> {
    all()
        .iter()
        .filter(|(name, text)| {
            let want = MANIFEST
                .lines()
                .find_map(|l| l.split_once("  ").filter(|(_, n)| n == name).map(|(h, _)| h));
            want != Some(sha256_hex(text).as_str())
        })
        .map(|(name, _)| name.to_string())
        .collect()
}

/// Splits a `# Header` structured asset into `(header, full section text)`
/// pairs. Each section text keeps its header line and trailing newline but
/// not the blank separator line.
pub fn sections(text: &str) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for chunk in text.split("\n\n# ") {
        let chunk = if out.is_empty() { chunk.to_string() } else { format!("# {chunk}") };
        let header = chunk.lines().next().unwrap_or("").trim_start_matches('#').trim().to_string();
        let mut body = chunk;
        if !body.ends_with('\n') {
            body.push('\n');
        }
        out.push((header, body));
    }
    out
}

pub fn section<'a>(secs: &'a [(String, String)], header: &str) -> &'a str {
    secs.iter().find(|(h, _)| h == header).map(|(_, t)| t.as_str()).unwrap_or("")
}
