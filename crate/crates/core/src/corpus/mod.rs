//! Article data model, ingestion, and corpus filtering.

mod filter;
mod ingest;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use filter::{
    filter_dates, filter_domain, filter_keywords, filter_topic_exclusion, run_filters, trim_length_percentiles,
    ExclusionSet, FilterConfig, FilterReport, StageCounts, TOPIC_FILTER_NOTE,
};
pub use ingest::{extract_domain, ingest, parse_date, IngestFormat, IngestOutcome, SkippedRecord};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("trim fractions must be non-negative and sum to less than 1 (low {low}, high {high})")]
    InvalidTrim { low: f64, high: f64 },
    #[error("date_min {min} is after date_max {max}")]
    InvalidDateRange { min: NaiveDate, max: NaiveDate },
    #[error("keyword filter needs at least one query term")]
    NoQueryTerms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    US,
    UK,
    ME,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::US, Region::UK, Region::ME];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::US => "US",
            Region::UK => "UK",
            Region::ME => "ME",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['_', '-'], " ").as_str() {
            "us" | "usa" | "united states" => Ok(Region::US),
            "uk" | "gb" | "united kingdom" => Ok(Region::UK),
            "me" | "middle east" => Ok(Region::ME),
            other => Err(format!("unknown region {other:?}")),
        }
    }
}

/// One news article. `domain` and `token_count` are derived from `url` and `body`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub url: String,
    pub domain: String,
    pub region: Region,
    pub title: String,
    pub body: String,
    pub published_at: NaiveDate,
    pub token_count: usize,
}

impl Article {
    /// Builds an article, deriving the domain and token count. `id` defaults to a content hash.
    pub fn new(
        id: Option<String>,
        url: &str,
        region: Region,
        title: &str,
        body: &str,
        published_at: NaiveDate,
    ) -> Result<Article, String> {
        let domain = extract_domain(url)?;
        let id = match id {
            Some(id) if !id.trim().is_empty() => id,
            _ => content_id(url, title, body),
        };
        Ok(Article {
            id,
            url: url.to_string(),
            domain,
            region,
            title: title.to_string(),
            body: body.to_string(),
            published_at,
            token_count: crate::text::token_count(body),
        })
    }
}

/// Stable id for records that carry none: first 16 hex chars of SHA-256 over url, title and body.
pub fn content_id(url: &str, title: &str, body: &str) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for part in [url, title, body] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    hex::encode(&h.finalize()[..8])
}
