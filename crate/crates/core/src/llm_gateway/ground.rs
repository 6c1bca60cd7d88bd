//! Excerpt grounding: does a model-quoted excerpt actually occur in the article?
//!
//! Both texts are normalized (case-folded, curly quotes straightened, whitespace runs
//! collapsed). The excerpt additionally loses surrounding quotes, ellipses and periods.
//! Grounded means the normalized excerpt is a substring of the normalized body; the
//! reported span is in char offsets of the original body, `[start, end)`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grounding {
    pub grounded: bool,
    pub span: Option<(usize, usize)>,
}

/// Normalized text plus, for each normalized char, the index of the source char it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub text: String,
    pub source: Vec<usize>,
}

pub fn normalize(text: &str) -> Normalized {
    let mut out = Normalized { text: String::with_capacity(text.len()), source: Vec::with_capacity(text.len()) };
    let mut pending_space: Option<usize> = None;
    for (i, c) in text.chars().enumerate() {
        if c.is_whitespace() {
            if !out.text.is_empty() && pending_space.is_none() {
                pending_space = Some(i);
            }
            continue;
        }
        if let Some(at) = pending_space.take() {
            out.text.push(' ');
            out.source.push(at);
        }
        let c = match c {
            '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' | '`' => '\'',
            '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' | '«' | '»' => '"',
            other => other,
        };
        for lc in c.to_lowercase() {
            out.text.push(lc);
            out.source.push(i);
        }
    }
    out
}

fn is_edge_noise(c: char) -> bool {
    c.is_whitespace() || matches!(c, '"' | '\'' | '…' | '.')
}

/// Normalized excerpt with surrounding quotes, ellipses and periods removed.
pub fn normalize_excerpt(excerpt: &str) -> String {
    normalize(excerpt).text.trim_matches(is_edge_noise).to_string()
}

pub fn ground_excerpt(excerpt: &str, body: &str) -> Grounding {
    let needle = normalize_excerpt(excerpt);
    if needle.is_empty() {
        return Grounding { grounded: false, span: None };
    }
    let hay = normalize(body);
    let Some(byte_pos) = hay.text.find(&needle) else {
        return Grounding { grounded: false, span: None };
    };
    let start_c = hay.text[..byte_pos].chars().count();
    let len_c = needle.chars().count();
    let start = hay.source[start_c];
    let end = hay.source[start_c + len_c - 1] + 1;
    Grounding { grounded: true, span: Some((start, end)) }
}
