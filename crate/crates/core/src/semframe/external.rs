//! Loading occurrences produced by an external frame-semantic parser.
//!
//! The file is the same occurrence JSONL the tagger writes, optionally led by a header
//! line. Frame names are resolved against the inventory (aliases allowed); unknown frames
//! are counted and dropped. Roles outside the frame's roles of interest are dropped. Lines
//! that do not fit the schema are skipped with their line number and reason.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use super::{OccurrenceSource, RoleFiller, SemanticFrameOccurrence, TextSpan};
use crate::jsonl::read_lines;
use crate::taxonomy::{normalize_name, FrameInventory, FrameOfInterest};

#[derive(Debug, Clone, Deserialize)]
struct RawRole {
    text: String,
    start: usize,
    end: usize,
    #[serde(default)]
    raw_role: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawOccurrence {
    article_id: String,
    sentence_index: usize,
    frame_name: String,
    trigger: TextSpan,
    #[serde(default)]
    roles: BTreeMap<String, RawRole>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalIngest {
    pub header: Option<Value>,
    pub occurrences: Vec<SemanticFrameOccurrence>,
    /// Dropped frame name -> count.
    pub out_of_inventory: BTreeMap<String, usize>,
    /// (1-based line number, reason) for schema violations.
    pub invalid: Vec<(usize, String)>,
    pub dropped_roles: usize,
}

impl ExternalIngest {
    pub fn skipped(&self) -> usize {
        self.out_of_inventory.values().sum::<usize>() + self.invalid.len()
    }
}

fn span_ok(text: &str, start: usize, end: usize) -> bool {
    start <= end && text.chars().count() == end - start
}

enum LineOutcome {
    Kept(SemanticFrameOccurrence, usize),
    OutOfInventory(String),
}

/// Parses one occurrence line. `Err` is a schema violation.
fn parse_line(line: &str, inventory: &FrameInventory) -> Result<LineOutcome, String> {
    let raw: RawOccurrence = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let Some(frame) = inventory.resolve(&raw.frame_name) else {
        return Ok(LineOutcome::OutOfInventory(raw.frame_name));
    };
    if raw.trigger.text.is_empty() || !span_ok(&raw.trigger.text, raw.trigger.start, raw.trigger.end) {
        return Err("trigger span does not match its text".into());
    }
    let mut roles = BTreeMap::new();
    let mut dropped = 0;
    for (name, r) in raw.roles {
        if !span_ok(&r.text, r.start, r.end) {
            return Err(format!("role {name:?} span does not match its text"));
        }
        let named = r.raw_role.as_deref().unwrap_or(&name);
        match role_label(frame, &name, named) {
            Some((label, raw_role)) => {
                roles.insert(label, RoleFiller { text: r.text, start: r.start, end: r.end, raw_role });
            }
            None => dropped += 1,
        }
    }
    Ok(LineOutcome::Kept(
        SemanticFrameOccurrence {
            article_id: raw.article_id,
            sentence_index: raw.sentence_index,
            frame_name: frame.frame_name.clone(),
            trigger: raw.trigger,
            roles,
            source: OccurrenceSource::External,
        },
        dropped,
    ))
}

/// (reporting label, raw frame element) for a role key, accepting either the raw name
/// (`Killer`) or its reporting label (`Assailant`).
fn role_label(frame: &FrameOfInterest, key: &str, raw_hint: &str) -> Option<(String, String)> {
    for candidate in [raw_hint, key] {
        let n = normalize_name(candidate);
        if let Some(raw) = frame.roles_of_interest.iter().find(|r| normalize_name(r) == n) {
            return Some((frame.reporting_role(raw)?, raw.clone()));
        }
    }
    let raw = frame.raw_role_for(key)?;
    Some((key.to_string(), raw.to_string()))
}

/// Parses a single external line; `Ok(None)` means the frame is outside the inventory.
pub fn parse_external_line(line: &str, inventory: &FrameInventory) -> Result<Option<SemanticFrameOccurrence>, String> {
    match parse_line(line, inventory)? {
        LineOutcome::Kept(occ, _) => Ok(Some(occ)),
        LineOutcome::OutOfInventory(_) => Ok(None),
    }
}

pub fn ingest_external(path: &Path, inventory: &FrameInventory) -> std::io::Result<ExternalIngest> {
    let lines = read_lines(path)?;
    let mut out = ExternalIngest { header: lines.header, ..ExternalIngest::default() };
    for (lineno, text) in lines.lines {
        match parse_line(&text, inventory) {
            Ok(LineOutcome::Kept(occ, dropped)) => {
                out.dropped_roles += dropped;
                out.occurrences.push(occ);
            }
            Ok(LineOutcome::OutOfInventory(name)) => *out.out_of_inventory.entry(name).or_default() += 1,
            Err(reason) => out.invalid.push((lineno, reason)),
        }
    }
    Ok(out)
}
