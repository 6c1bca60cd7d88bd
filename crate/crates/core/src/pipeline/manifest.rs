//! The run manifest: what produced the artifacts in an output directory.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use chrono::{DateTime, SecondsFormat};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Backends {
    pub model: String,
    pub occurrence_source: String,
    /// Digest of the lexicon when the lexicon tagger is used.
    pub lexicon: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub version: u32,
    pub completed_at: String,
    /// Records per artifact, relative to the output directory.
    pub counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_hash: String,
    pub config_hash: String,
    pub corpus_digest: String,
    pub resource_digests: BTreeMap<String, String>,
    pub stage_versions: BTreeMap<String, u32>,
    pub backends: Backends,
    pub deviation_notes: Vec<String>,
    pub created_at: String,
    pub updated_at: String,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Option<RunManifest> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn save(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(dir.join(MANIFEST_FILE), text)
    }

    /// Compares every recorded count with the artifact on disk; returns the mismatches.
    pub fn verify_counts(&self, dir: &Path) -> Vec<String> {
        let mut out = Vec::new();
        for (stage, rec) in &self.stages {
            for (file, &expected) in &rec.counts {
                match count_records(&dir.join(file)) {
                    Ok(n) if n == expected => {}
                    Ok(n) => out.push(format!("{stage}: {file} has {n} records, manifest says {expected}")),
                    Err(e) => out.push(format!("{stage}: {file}: {e}")),
                }
            }
        }
        out
    }
}

/// Records in a JSONL or CSV artifact: header line, `#` comment lines and the CSV column
/// row are not counted.
pub fn count_records(path: &Path) -> std::io::Result<usize> {
    let is_csv = path.extension().is_some_and(|e| e == "csv");
    if is_csv {
        let text = std::fs::read_to_string(path)?;
        let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        return Ok(rdr.records().filter(|r| r.is_ok()).count());
    }
    Ok(crate::jsonl::read_lines(path)?.lines.len())
}

pub fn now_timestamp() -> String {
    let d = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    DateTime::from_timestamp(d.as_secs() as i64, d.subsec_nanos())
        .map(|t| t.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_default()
}
