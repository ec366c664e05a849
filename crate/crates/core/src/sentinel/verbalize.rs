use serde::{Deserialize, Serialize};

use super::Verdict;

pub const FIFTY_CHAR_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerbalMode {
    Full,
    FiftyChar,
}

/// `Full`: `SEVERITY: detail`. `FiftyChar`: summary and reason on two lines,
/// each cut to at most 50 characters.
pub fn verbalize(v: &Verdict, mode: VerbalMode) -> String {
    match mode {
        VerbalMode::Full => format!("{}: {}", v.severity.name().to_ascii_uppercase(), v.detail),
        VerbalMode::FiftyChar => format!("{}\n{}", fifty_char(&v.summary), fifty_char(&v.reason)),
    }
}

/// Collapses whitespace and keeps whole words up to 50 characters. A single
/// word longer than the limit is cut mid-word.
pub fn fifty_char(text: &str) -> String {
    let mut out = String::new();
    let mut len = 0;
    for word in text.split_whitespace() {
        let wl = word.chars().count();
        let need = if out.is_empty() { wl } else { wl + 1 };
        if len + need <= FIFTY_CHAR_LIMIT {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(word);
            len += need;
        } else {
            if out.is_empty() {
                out = word.chars().take(FIFTY_CHAR_LIMIT).collect();
            }
            break;
        }
    }
    out
}
