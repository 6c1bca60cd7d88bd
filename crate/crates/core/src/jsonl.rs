//! JSON Lines helpers.
//!
//! Pipeline artifacts may begin with a single header line of the form
//! `{"__header__": {...}}`. Readers skip it and expose it separately; record
//! counts never include it.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

pub const HEADER_KEY: &str = "__header__";

/// Raw lines of a JSONL file with the optional header split off.
#[derive(Debug, Default)]
pub struct JsonlLines {
    pub header: Option<Value>,
    /// `(1-based line number, line text)` for every non-blank record line.
    pub lines: Vec<(usize, String)>,
}

pub fn read_lines(path: &Path) -> io::Result<JsonlLines> {
    let text = fs::read_to_string(path)?;
    let mut out = JsonlLines::default();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if i == 0 || (out.header.is_none() && out.lines.is_empty()) {
            if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(trimmed) {
                if let Some(h) = map.get(HEADER_KEY) {
                    out.header = Some(h.clone());
                    continue;
                }
            }
        }
        out.lines.push((i + 1, trimmed.to_string()));
    }
    Ok(out)
}

/// Reads every record, failing on the first line that does not deserialize.
pub fn read_records<T: DeserializeOwned>(path: &Path) -> io::Result<(Option<Value>, Vec<T>)> {
    let lines = read_lines(path)?;
    let mut records = Vec::with_capacity(lines.lines.len());
    for (no, line) in &lines.lines {
        let rec = serde_json::from_str(line).map_err(|e| {
            io::Error::new(io::ErrorKind::InvalidData, format!("{}:{no}: {e}", path.display()))
        })?;
        records.push(rec);
    }
    Ok((lines.header, records))
}

/// Writes `records` one per line, preceded by `header` when given. Returns the record count.
pub fn write_records<T: Serialize>(path: &Path, header: Option<&Value>, records: &[T]) -> io::Result<usize> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    if let Some(h) = header {
        let mut obj = serde_json::Map::new();
        obj.insert(HEADER_KEY.to_string(), h.clone());
        serde_json::to_writer(&mut w, &Value::Object(obj))?;
        w.write_all(b"\n")?;
    }
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(records.len())
}
