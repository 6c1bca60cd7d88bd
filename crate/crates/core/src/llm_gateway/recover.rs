//! Recovery of a JSON object from free-form model output.
//!
//! Models wrap answers in code fences, add prose, leave trailing commas, or copy
//! tuple parentheses from the prompt scaffold. Recovery takes the outermost
//! balanced `{...}` and, if strict parsing fails, retries after removing
//! trailing commas and turning bare parentheses into brackets.

use serde_json::Value;

/// Returns the first JSON object that can be recovered from `raw`.
pub fn recover_object(raw: &str) -> Option<Value> {
    let text = strip_fences(raw);
    let mut from = 0;
    while let Some(rel) = text[from..].find('{') {
        let start = from + rel;
        if let Some(end) = matching_brace(text, start) {
            let candidate = &text[start..=end];
            if let Some(v) = parse_lenient(candidate) {
                return Some(v);
            }
        } else if let Some(v) = parse_lenient(&text[start..]) {
            return Some(v);
        }
        from = start + 1;
    }
    None
}

fn parse_lenient(candidate: &str) -> Option<Value> {
    let attempts = [candidate.to_string(), repair(candidate, false), repair(candidate, true)];
    attempts
        .iter()
        .filter_map(|c| serde_json::from_str::<Value>(c).ok())
        .find(Value::is_object)
}

/// Text inside the first fenced block, or the input unchanged if there is none.
pub fn strip_fences(raw: &str) -> &str {
    let Some(open) = raw.find("```") else { return raw };
    let after = &raw[open + 3..];
    // Skip an info string such as `json` on the fence line.
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
    let body = &after[body_start..];
    match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    }
}

/// Index of the `}` that closes the `{` at `start`, skipping string contents.
fn matching_brace(text: &str, start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_str = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(start + i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Removes trailing commas outside strings; optionally maps `(`/`)` to `[`/`]`.
/// Unbalanced input is closed with the missing brackets.
fn repair(text: &str, tuples: bool) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_str = false;
    let mut escaped = false;
    let mut stack = Vec::new();
    for c in text.chars() {
        if in_str {
            out.push(c);
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        let c = match c {
            '(' if tuples => '[',
            ')' if tuples => ']',
            other => other,
        };
        match c {
            '"' => in_str = true,
            '{' => stack.push('}'),
            '[' => stack.push(']'),
            '}' | ']' => {
                let trimmed = out.trim_end().len();
                if out[..trimmed].ends_with(',') {
                    out.truncate(trimmed - 1);
                }
                stack.pop();
            }
            _ => {}
        }
        out.push(c);
    }
    if in_str {
        out.push('"');
    }
    while let Some(close) = stack.pop() {
        let trimmed = out.trim_end().len();
        if out[..trimmed].ends_with(',') {
            out.truncate(trimmed - 1);
        }
        out.push(close);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn plain_object() {
        assert_eq!(recover_object(r#"{"a": 1}"#), Some(json!({"a": 1})));
    }

    #[test]
    fn fenced_with_prose() {
        let raw = "Sure! Here you go:\n```json\n{\"frames-list\": [\"security and defense\"]}\n```\nHope this helps.";
        assert_eq!(recover_object(raw), Some(json!({"frames-list": ["security and defense"]})));
    }

    #[test]
    fn braces_inside_strings() {
        let raw = r#"note {"reason": "uses {braces} and \"quotes\"", "x": [1]} tail }"#;
        assert_eq!(recover_object(raw), Some(json!({"reason": "uses {braces} and \"quotes\"", "x": [1]})));
    }

    #[test]
    fn trailing_commas_and_tuples() {
        let raw = r#"{"a": {"b": [("x", "y", "z"),],}, "c": [1, 2,],}"#;
        assert_eq!(recover_object(raw), Some(json!({"a": {"b": [["x", "y", "z"]]}, "c": [1, 2]})));
    }

    #[test]
    fn parentheses_in_strings_survive() {
        let raw = r#"{"a": [("he said (twice)", "t"),]}"#;
        assert_eq!(recover_object(raw), Some(json!({"a": [["he said (twice)", "t"]]})));
    }

    #[test]
    fn truncated_output_is_closed() {
        let raw = r#"{"a": ["x", "y"#;
        assert_eq!(recover_object(raw), Some(json!({"a": ["x", "y"]})));
    }

    #[test]
    fn hopeless_input() {
        assert_eq!(recover_object("no json here"), None);
        assert_eq!(recover_object("[1, 2, 3]"), None);
        assert_eq!(recover_object(""), None);
    }
}
