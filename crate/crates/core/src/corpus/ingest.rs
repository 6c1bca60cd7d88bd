use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use super::{Article, CorpusError, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IngestFormat {
    #[default]
    Jsonl,
    Csv,
}

impl FromStr for IngestFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(IngestFormat::Jsonl),
            "csv" => Ok(IngestFormat::Csv),
            other => Err(format!("unknown corpus format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRecord {
    /// 1-based line (JSONL) or record (CSV) number.
    pub record: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestOutcome {
    pub articles: Vec<Article>,
    pub skipped: Vec<SkippedRecord>,
}

impl IngestOutcome {
    pub fn skipped_count(&self) -> usize {
        self.skipped.len()
    }
}

#[derive(Debug, Default, Deserialize)]
struct RawRecord {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    url: Option<String>,
    #[serde(default)]
    region: Option<String>,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    body: Option<String>,
    #[serde(default)]
    published_at: Option<String>,
}

/// Reads articles from a JSONL or CSV file. Malformed records are skipped and reported.
pub fn ingest(path: &Path, format: IngestFormat) -> Result<IngestOutcome, CorpusError> {
    let io_err = |source| CorpusError::Io { path: path.display().to_string(), source };
    let raws: Vec<(usize, Result<RawRecord, String>)> = match format {
        IngestFormat::Jsonl => {
            let lines = crate::jsonl::read_lines(path).map_err(io_err)?;
            lines
                .lines
                .into_iter()
                .map(|(no, line)| (no, serde_json::from_str::<RawRecord>(&line).map_err(|e| format!("invalid JSON: {e}"))))
                .collect()
        }
        IngestFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .flexible(true)
                .from_path(path)
                .map_err(|e| match e.into_kind() {
                    csv::ErrorKind::Io(source) => io_err(source),
                    other => io_err(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{other:?}"))),
                })?;
            rdr.deserialize::<RawRecord>()
                .enumerate()
                .map(|(i, r)| (i + 1, r.map_err(|e| format!("invalid CSV record: {e}"))))
                .collect()
        }
    };

    let mut out = IngestOutcome::default();
    let mut seen = HashSet::new();
    for (record, raw) in raws {
        match raw.and_then(into_article) {
            Ok(article) => {
                if seen.insert(article.id.clone()) {
                    out.articles.push(article);
                } else {
                    out.skipped.push(SkippedRecord { record, reason: format!("duplicate id {}", article.id) });
                }
            }
            Err(reason) => out.skipped.push(SkippedRecord { record, reason }),
        }
    }
    for s in &out.skipped {
        log::debug!("{}: record {} skipped: {}", path.display(), s.record, s.reason);
    }
    Ok(out)
}

fn into_article(raw: RawRecord) -> Result<Article, String> {
    fn required(v: Option<String>, name: &str) -> Result<String, String> {
        match v {
            Some(s) if !s.trim().is_empty() => Ok(s),
            _ => Err(format!("missing {name}")),
        }
    }
    let url = required(raw.url, "url")?;
    let region = required(raw.region, "region")?;
    let title = required(raw.title, "title")?;
    let body = required(raw.body, "body")?;
    let published_at = required(raw.published_at, "published_at")?;
    let region = Region::from_str(&region)?;
    let date = parse_date(&published_at)?;
    Article::new(raw.id, &url, region, &title, &body, date)
}

/// Parses an ISO-8601 date, or an RFC 3339 timestamp converted to its UTC date.
pub fn parse_date(s: &str) -> Result<NaiveDate, String> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.with_timezone(&Utc).date_naive());
    }
    if let Ok(dt) = chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Ok(dt.date());
    }
    if let Ok(dt) = chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S") {
        return Ok(dt.date());
    }
    Err(format!("invalid date {s:?}"))
}

/// Lowercased registrable domain of `url`, without scheme, path, port, or `www.` prefix.
pub fn extract_domain(url: &str) -> Result<String, String> {
    let parsed = url::Url::parse(url.trim()).map_err(|e| format!("invalid url {url:?}: {e}"))?;
    let host = parsed.host_str().ok_or_else(|| format!("url {url:?} has no host"))?;
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    let host = host.strip_prefix("www.").unwrap_or(&host).to_string();
    let registrable = psl::domain_str(&host).map(str::to_string).unwrap_or(host);
    Ok(registrable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn host_extraction() {
        assert_eq!(extract_domain("https://www.bbc.co.uk/news/x").unwrap(), "bbc.co.uk");
        assert_eq!(extract_domain("http://WWW.NYTimes.com:8080/a?b=c").unwrap(), "nytimes.com");
        assert_eq!(extract_domain("https://edition.almanar.com.lb/123").unwrap(), "almanar.com.lb");
        assert_eq!(extract_domain("https://english.news.cn/x").unwrap(), "news.cn");
        assert!(extract_domain("not a url").is_err());
    }

    #[test]
    fn dates() {
        let d = NaiveDate::from_ymd_opt(2023, 10, 7).unwrap();
        assert_eq!(parse_date("2023-10-07").unwrap(), d);
        assert_eq!(parse_date("2023-10-07T23:30:00Z").unwrap(), d);
        assert_eq!(parse_date("2023-10-08T01:30:00+03:00").unwrap(), d);
        assert!(parse_date("07/10/2023").is_err());
    }

    const FIXTURE: &str = r#"{"id":"a1","url":"https://www.bbc.co.uk/news/x","region":"UK","title":"Gaza","body":"Strikes on Gaza.","published_at":"2023-10-09"}
{"id":"a2","url":"https://www.nytimes.com/a","region":"US","title":"Hamas","body":"Hamas said.","published_at":"2023-10-10"}
{"id":"a3","url":"https://www.arabnews.com/b","region":"ME","title":"Israel","body":"Israel said.","published_at":"2023-11-01"}
{"id":"a4","url":"https://www.arabnews.com/c","region":"ME","title":"No body","published_at":"2023-11-01"}
"#;

    #[test]
    fn three_valid_one_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        fs::write(&p, FIXTURE).unwrap();
        let out = ingest(&p, IngestFormat::Jsonl).unwrap();
        assert_eq!(out.articles.len(), 3);
        assert_eq!(out.skipped_count(), 1);
        assert_eq!(out.skipped[0].record, 4);
        assert_eq!(out.skipped[0].reason, "missing body");
        assert_eq!(out.articles[0].domain, "bbc.co.uk");
        assert_eq!(out.articles[0].token_count, 3);
    }

    #[test]
    fn csv_variant_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        fs::write(
            &p,
            "id,url,region,title,body,published_at\n\
             x,https://npr.org/a,US,T,\"Body, with comma\",2023-10-09\n\
             x,https://npr.org/b,US,T,Body,2023-10-09\n\
             ,https://npr.org/c,US,T,Other body,2023-10-09\n\
             y,https://npr.org/d,XX,T,Body,2023-10-09\n",
        )
        .unwrap();
        let out = ingest(&p, IngestFormat::Csv).unwrap();
        assert_eq!(out.articles.len(), 2);
        assert_eq!(out.articles[0].body, "Body, with comma");
        assert_eq!(out.articles[1].id.len(), 16);
        assert_eq!(out.skipped_count(), 2);
        assert!(out.skipped[0].reason.starts_with("duplicate id"));
    }

    #[test]
    fn unreadable_file_is_fatal() {
        assert!(matches!(
            ingest(Path::new("/nonexistent/corpus.jsonl"), IngestFormat::Jsonl),
            Err(CorpusError::Io { .. })
        ));
    }
}
