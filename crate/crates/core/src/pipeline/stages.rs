//! The record-producing stages: ingest through tag-frames, plus eval.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{parallel_map, Pipeline, PipelineError, Stage, EVAL_DIR};
use super::{
    ARTICLES, FILTERED, FILTER_REPORT, GENERIC, GENERIC_AUDIT, GENERIC_REPORT, INDICATORS, INDICATOR_AUDIT,
    INDICATOR_REPORT, INGEST_REPORT, OCCURRENCES, TAG_REPORT,
};
use crate::corpus::{ingest, run_filters, Article};
use crate::evalkit::{evaluate, load_gold, pair_predictions, render_report_table, EvalOptions};
use crate::llm_gateway::transport::ResponseCache;
use crate::llm_gateway::{
    parse_generic_response, parse_indicator_response, render_generic_prompt, render_indicator_prompt, CompletionError,
    GatewayError, GenericFrameAssignment, IndicatorInstance, LlmClient, RenderedPrompt,
};
use crate::semframe::{ingest_external, tag_article, OccurrenceSource, SemanticFrameOccurrence};

/// What a stage wrote and what it ran into.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    /// Records per line-oriented artifact (JSONL, CSV), relative to the output directory.
    pub counts: BTreeMap<String, usize>,
    /// Per-article outcome counts for the model-backed stages.
    pub status_counts: BTreeMap<String, usize>,
    /// Articles whose request failed after retries or was rejected.
    pub endpoint_failures: usize,
}

impl StageReport {
    fn new(stage: Stage) -> StageReport {
        StageReport { stage: stage.name().to_string(), ..StageReport::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditStatus {
    Ok,
    /// No JSON object could be recovered from the response.
    Unparseable,
    /// Retries exhausted, request rejected, or the completion itself was unreadable.
    EndpointFailure,
    EmptyBody,
    /// Parsed, but no label survived validation.
    InvalidLabels,
}

impl AuditStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            AuditStatus::Ok => "ok",
            AuditStatus::Unparseable => "unparseable",
            AuditStatus::EndpointFailure => "endpoint_failure",
            AuditStatus::EmptyBody => "empty_body",
            AuditStatus::InvalidLabels => "invalid_labels",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericAudit {
    pub article_id: String,
    pub status: AuditStatus,
    pub detail: Option<String>,
    pub unknown_labels: Vec<String>,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorAudit {
    pub article_id: String,
    pub status: AuditStatus,
    pub detail: Option<String>,
    pub skipped_by_kind: BTreeMap<String, usize>,
    pub unknown_keys: Vec<String>,
    /// Instances whose excerpt was not found in the body. They never reach the statistics.
    pub ungrounded: Vec<IndicatorInstance>,
    pub truncated: bool,
}

enum Call {
    Done(String, bool),
    EmptyBody,
    Failed(String),
}

fn call(client: &LlmClient, prompt: Result<RenderedPrompt, GatewayError>) -> Call {
    match prompt {
        Err(GatewayError::EmptyBody(_)) => Call::EmptyBody,
        Err(e) => Call::Failed(e.to_string()),
        Ok(p) => match client.complete(&p.request) {
            Ok(c) => Call::Done(c.content, p.truncated),
            Err(e @ (CompletionError::Exhausted { .. } | CompletionError::Rejected { .. } | CompletionError::Malformed(_))) => {
                Call::Failed(e.to_string())
            }
        },
    }
}

fn tally<'a>(statuses: impl IntoIterator<Item = &'a AuditStatus>) -> BTreeMap<String, usize> {
    let mut m: BTreeMap<String, usize> = BTreeMap::new();
    for s in statuses {
        *m.entry(s.as_str().to_string()).or_default() += 1;
    }
    m
}

impl Pipeline {
    fn client(&self) -> Result<LlmClient, PipelineError> {
        let dir = self.config.cache_dir();
        let cache = ResponseCache::new(&dir).map_err(PipelineError::io(&dir))?;
        LlmClient::new(self.endpoint()?, Some(cache)).map_err(|e| PipelineError::Config(e.to_string()))
    }

    fn filtered_articles(&self) -> Result<Vec<Article>, PipelineError> {
        let path = self.primary_input(Stage::Filter)?;
        let mut articles: Vec<Article> = self.read_jsonl(&path)?;
        articles.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(articles)
    }

    pub(super) fn run_ingest(&mut self) -> Result<StageReport, PipelineError> {
        let input = self.options.stage_input.clone().unwrap_or_else(|| self.config.paths.corpus.clone());
        let outcome =
            ingest(&input, self.config.paths.corpus_format).map_err(|e| PipelineError::Config(e.to_string()))?;
        let mut articles = outcome.articles;
        articles.sort_by(|a, b| a.id.cmp(&b.id));
        let mut r = StageReport::new(Stage::Ingest);
        r.counts.insert(ARTICLES.into(), self.write_jsonl(Stage::Ingest, ARTICLES, &articles)?);
        let report = json!({
            "records": articles.len() + outcome.skipped.len(),
            "articles": articles.len(),
            "skipped": outcome.skipped,
        });
        self.write_json(Stage::Ingest, INGEST_REPORT, &report)?;
        Ok(r)
    }

    pub(super) fn run_filter(&mut self) -> Result<StageReport, PipelineError> {
        let path = self.primary_input(Stage::Ingest)?;
        let articles: Vec<Article> = self.read_jsonl(&path)?;
        let (mut kept, report) =
            run_filters(articles, &self.config.filter).map_err(|e| PipelineError::Config(e.to_string()))?;
        kept.sort_by(|a, b| a.id.cmp(&b.id));
        let mut r = StageReport::new(Stage::Filter);
        r.counts.insert(FILTERED.into(), self.write_jsonl(Stage::Filter, FILTERED, &kept)?);
        self.write_json(Stage::Filter, FILTER_REPORT, &report)?;
        Ok(r)
    }

    pub(super) fn run_classify(&mut self) -> Result<StageReport, PipelineError> {
        let articles = self.filtered_articles()?;
        let client = self.client()?;
        let inv = &self.taxonomies.generic;
        let results = parallel_map(&articles, self.concurrency(), |a| {
            let prompt = render_generic_prompt(a, inv, &self.templates, &self.config.model);
            let audit = |status, detail: Option<String>, unknown: Vec<String>, truncated| GenericAudit {
                article_id: a.id.clone(),
                status,
                detail,
                unknown_labels: unknown,
                truncated,
            };
            match call(&client, prompt) {
                Call::EmptyBody => (None, audit(AuditStatus::EmptyBody, None, vec![], false)),
                Call::Failed(e) => (None, audit(AuditStatus::EndpointFailure, Some(e), vec![], false)),
                Call::Done(raw, truncated) => {
                    let parsed = parse_generic_response(&raw, &a.id, inv);
                    let status = match (&parsed.failure, parsed.assignment.valid) {
                        (Some(_), _) => AuditStatus::Unparseable,
                        (None, false) => AuditStatus::InvalidLabels,
                        (None, true) => AuditStatus::Ok,
                    };
                    let a = audit(status, parsed.failure.clone(), parsed.unknown_labels.clone(), truncated);
                    (Some(parsed.assignment), a)
                }
            }
        });
        let mut assignments: Vec<GenericFrameAssignment> = Vec::new();
        let mut audits = Vec::new();
        for (assignment, audit) in results {
            assignments.extend(assignment);
            audits.push(audit);
        }
        let mut r = StageReport::new(Stage::ClassifyGeneric);
        r.status_counts = tally(audits.iter().map(|a| &a.status));
        r.endpoint_failures = audits.iter().filter(|a| a.status == AuditStatus::EndpointFailure).count();
        r.counts.insert(GENERIC.into(), self.write_jsonl(Stage::ClassifyGeneric, GENERIC, &assignments)?);
        r.counts.insert(GENERIC_AUDIT.into(), self.write_jsonl(Stage::ClassifyGeneric, GENERIC_AUDIT, &audits)?);
        let unknown: usize = audits.iter().map(|a| a.unknown_labels.len()).sum();
        let report = json!({
            "articles": articles.len(),
            "status_counts": r.status_counts,
            "unknown_labels": unknown,
            "endpoint_failures": r.endpoint_failures,
        });
        self.write_json(Stage::ClassifyGeneric, GENERIC_REPORT, &report)?;
        Ok(r)
    }

    pub(super) fn run_extract(&mut self) -> Result<StageReport, PipelineError> {
        let articles = self.filtered_articles()?;
        let client = self.client()?;
        let inv = &self.taxonomies.indicators;
        let results = parallel_map(&articles, self.concurrency(), |a| {
            let prompt = render_indicator_prompt(a, inv, &self.templates, &self.config.model);
            let mut audit = IndicatorAudit {
                article_id: a.id.clone(),
                status: AuditStatus::Ok,
                detail: None,
                skipped_by_kind: BTreeMap::new(),
                unknown_keys: Vec::new(),
                ungrounded: Vec::new(),
                truncated: false,
            };
            match call(&client, prompt) {
                Call::EmptyBody => {
                    audit.status = AuditStatus::EmptyBody;
                    (Vec::new(), audit)
                }
                Call::Failed(e) => {
                    audit.status = AuditStatus::EndpointFailure;
                    audit.detail = Some(e);
                    (Vec::new(), audit)
                }
                Call::Done(raw, truncated) => {
                    let parsed = parse_indicator_response(&raw, a, inv);
                    audit.truncated = truncated;
                    if parsed.failure.is_some() {
                        audit.status = AuditStatus::Unparseable;
                    }
                    audit.detail = parsed.failure;
                    audit.skipped_by_kind = parsed.skipped_by_kind;
                    audit.unknown_keys = parsed.unknown_keys;
                    let (grounded, ungrounded): (Vec<_>, Vec<_>) = parsed.instances.into_iter().partition(|i| i.grounded);
                    audit.ungrounded = ungrounded;
                    (grounded, audit)
                }
            }
        });
        let mut instances = Vec::new();
        let mut audits = Vec::new();
        for (grounded, audit) in results {
            instances.extend(grounded);
            audits.push(audit);
        }
        let mut r = StageReport::new(Stage::ExtractIndicators);
        r.status_counts = tally(audits.iter().map(|a| &a.status));
        r.endpoint_failures = audits.iter().filter(|a| a.status == AuditStatus::EndpointFailure).count();
        r.counts.insert(INDICATORS.into(), self.write_jsonl(Stage::ExtractIndicators, INDICATORS, &instances)?);
        r.counts.insert(INDICATOR_AUDIT.into(), self.write_jsonl(Stage::ExtractIndicators, INDICATOR_AUDIT, &audits)?);
        let mut skipped: BTreeMap<&str, usize> = BTreeMap::new();
        for a in &audits {
            for (k, n) in &a.skipped_by_kind {
                *skipped.entry(k.as_str()).or_default() += n;
            }
        }
        let report = json!({
            "articles": articles.len(),
            "status_counts": r.status_counts,
            "grounded_instances": instances.len(),
            "ungrounded_instances": audits.iter().map(|a| a.ungrounded.len()).sum::<usize>(),
            "skipped_by_kind": skipped,
            "unknown_keys": audits.iter().map(|a| a.unknown_keys.len()).sum::<usize>(),
            "endpoint_failures": r.endpoint_failures,
        });
        self.write_json(Stage::ExtractIndicators, INDICATOR_REPORT, &report)?;
        Ok(r)
    }

    pub(super) fn run_tag(&mut self) -> Result<StageReport, PipelineError> {
        let articles = self.filtered_articles()?;
        let frames = &self.taxonomies.frames;
        let source = self.config.analysis.frame_backend;
        let mut extra = json!({});
        let mut occurrences: Vec<SemanticFrameOccurrence> = match source {
            OccurrenceSource::Lexicon => {
                let scope = self.config.analysis.frame_text_scope;
                parallel_map(&articles, self.concurrency(), |a| {
                    tag_article(a, scope, &self.lexicon, &self.gazetteer, frames)
                })
                .into_iter()
                .flatten()
                .collect()
            }
            OccurrenceSource::External => {
                let path = self.config.paths.external_occurrences.clone().expect("validated with the config");
                let got = ingest_external(&path, frames).map_err(PipelineError::io(&path))?;
                let ids: BTreeSet<&str> = articles.iter().map(|a| a.id.as_str()).collect();
                let (kept, outside): (Vec<_>, Vec<_>) =
                    got.occurrences.into_iter().partition(|o| ids.contains(o.article_id.as_str()));
                extra = json!({
                    "header": got.header,
                    "out_of_inventory": got.out_of_inventory,
                    "invalid_lines": got.invalid.iter().map(|(l, why)| json!({"line": l, "reason": why})).collect::<Vec<_>>(),
                    "dropped_roles": got.dropped_roles,
                    "not_in_corpus": outside.len(),
                });
                kept
            }
        };
        occurrences.sort();
        let mut by_frame: BTreeMap<&str, usize> = BTreeMap::new();
        for o in &occurrences {
            *by_frame.entry(o.frame_name.as_str()).or_default() += 1;
        }
        let report = json!({
            "source": source,
            "articles": articles.len(),
            "occurrences": occurrences.len(),
            "with_roles": occurrences.iter().filter(|o| !o.roles.is_empty()).count(),
            "by_frame": by_frame,
            "external": extra,
        });
        let mut r = StageReport::new(Stage::TagFrames);
        r.counts.insert(OCCURRENCES.into(), self.write_jsonl(Stage::TagFrames, OCCURRENCES, &occurrences)?);
        self.write_json(Stage::TagFrames, TAG_REPORT, &report)?;
        Ok(r)
    }

    pub(super) fn run_eval(&mut self) -> Result<StageReport, PipelineError> {
        let gold_path = match (&self.options.stage_input, &self.config.paths.gold) {
            (Some(p), _) | (None, Some(p)) => p.clone(),
            (None, None) => return Err(PipelineError::Config("eval needs paths.gold or --stage-input".into())),
        };
        let predictions: Vec<GenericFrameAssignment> = self.read_jsonl(&self.require(Stage::ClassifyGeneric)?)?;
        let inv = &self.taxonomies.generic;
        let data_err = |e: crate::evalkit::EvalError| PipelineError::Data {
            path: gold_path.display().to_string(),
            message: e.to_string(),
        };
        let gold = load_gold(&gold_path, self.config.paths.gold_format, inv).map_err(data_err)?;
        let (pairs, missing) = pair_predictions(&gold, &predictions);
        let options = EvalOptions { include_none: self.config.analysis.include_none_in_eval };
        let report = evaluate(&pairs, inv, options).map_err(data_err)?;
        let doc = json!({"metrics": report, "missing_predictions": missing, "include_none": options.include_none});
        self.write_json(Stage::Eval, &format!("{EVAL_DIR}/metrics.json"), &doc)?;
        let mut table = render_report_table(&report, inv);
        if missing > 0 {
            table.push_str(&format!("{missing} gold articles had no prediction and were scored as empty\n"));
        }
        self.write_text(&format!("{EVAL_DIR}/metrics.txt"), &table)?;
        let mut r = StageReport::new(Stage::Eval);
        r.status_counts.insert("pairs".into(), report.pairs);
        r.status_counts.insert("missing_predictions".into(), missing);
        Ok(r)
    }
}
