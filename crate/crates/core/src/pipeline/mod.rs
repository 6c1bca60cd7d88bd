//! Stage orchestration over on-disk artifacts.
//!
//! Stages run in the order of [`Stage::ALL`]. Each reads the artifacts of the stages before
//! it from the output directory and writes its own, so any stage can be rerun alone. Every
//! artifact carries the manifest hash, a digest of everything that determines its content.

mod aggregate;
pub mod config;
mod manifest;
mod parallel;
mod report;
mod stages;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use aggregate::{AggregateBundle, RegionTopWords, ALL_REGIONS_KEY};
pub use config::{AnalysisConfig, PathsConfig, PipelineConfig, StageToggles};
pub use manifest::{count_records, now_timestamp, Backends, RunManifest, StageRecord, MANIFEST_FILE};
pub use parallel::parallel_map;
pub use stages::{AuditStatus, GenericAudit, IndicatorAudit, StageReport};

use crate::analytics::Stopwords;
use crate::corpus::{ingest, Region, TOPIC_FILTER_NOTE};
use crate::llm_gateway::{EndpointConfig, PromptTemplates};
use crate::semframe::{Gazetteer, Lexicon, OccurrenceSource};
use crate::taxonomy::{load_taxonomies, Taxonomies};

pub const ARTICLES: &str = "articles.jsonl";
pub const INGEST_REPORT: &str = "ingest_report.json";
pub const FILTERED: &str = "filtered.jsonl";
pub const FILTER_REPORT: &str = "filter_report.json";
pub const GENERIC: &str = "generic_assignments.jsonl";
pub const GENERIC_AUDIT: &str = "generic_audit.jsonl";
pub const GENERIC_REPORT: &str = "generic_report.json";
pub const INDICATORS: &str = "indicator_instances.jsonl";
pub const INDICATOR_AUDIT: &str = "indicator_audit.jsonl";
pub const INDICATOR_REPORT: &str = "indicator_report.json";
pub const OCCURRENCES: &str = "occurrences.jsonl";
pub const TAG_REPORT: &str = "tag_report.json";
pub const AGGREGATE_DIR: &str = "aggregate";
pub const EVAL_DIR: &str = "eval";
pub const REPORT_DIR: &str = "report";

pub const LEXICON_NOTE: &str =
    "frame tagging: deterministic lexical-unit matching with heuristic Assailant/Victim roles in place of a neural frame parser";
pub const CLUSTER_NOTE: &str =
    "target clustering: normalized token Jaccard merging (threshold 0.5, single linkage) in place of neural topic clustering";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Filter,
    ClassifyGeneric,
    ExtractIndicators,
    TagFrames,
    Aggregate,
    Eval,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Filter,
        Stage::ClassifyGeneric,
        Stage::ExtractIndicators,
        Stage::TagFrames,
        Stage::Aggregate,
        Stage::Eval,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Filter => "filter",
            Stage::ClassifyGeneric => "classify-generic",
            Stage::ExtractIndicators => "extract-indicators",
            Stage::TagFrames => "tag-frames",
            Stage::Aggregate => "aggregate",
            Stage::Eval => "eval",
            Stage::Report => "report",
        }
    }

    /// Bumped whenever a stage's output format or logic changes.
    pub fn version(self) -> u32 {
        1
    }

    /// The artifact whose presence marks the stage as done.
    pub fn primary_output(self) -> &'static str {
        match self {
            Stage::Ingest => ARTICLES,
            Stage::Filter => FILTERED,
            Stage::ClassifyGeneric => GENERIC,
            Stage::ExtractIndicators => INDICATORS,
            Stage::TagFrames => OCCURRENCES,
            Stage::Aggregate => "aggregate/region_summary.json",
            Stage::Eval => "eval/metrics.json",
            Stage::Report => "report/report.md",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("run {stage} first: missing {path}")]
    MissingArtifact { stage: Stage, path: String },
    #[error("{path}: {message}")]
    Data { path: String, message: String },
}

impl PipelineError {
    /// Process exit code: 1 for configuration and I/O problems, 2 for a missing upstream artifact.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::MissingArtifact { .. } => 2,
            _ => 1,
        }
    }

    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
        move |source| PipelineError::Io { path: path.display().to_string(), source }
    }
}

/// Per-invocation overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Chat endpoint to use instead of the configured one; no credential is required.
    pub mock_endpoint: Option<String>,
    /// Replaces the primary input of the stage being run.
    pub stage_input: Option<PathBuf>,
    /// Restricts aggregate and report to one region.
    pub region: Option<Region>,
    pub concurrency: Option<usize>,
}

pub struct Pipeline {
    config: PipelineConfig,
    options: RunOptions,
    taxonomies: Taxonomies,
    templates: PromptTemplates,
    lexicon: Lexicon,
    gazetteer: Gazetteer,
    stopwords: Stopwords,
    manifest: RunManifest,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, options: RunOptions) -> Result<Pipeline, PipelineError> {
        config.validate()?;
        if options.concurrency == Some(0) {
            return Err(PipelineError::Config("concurrency must be at least 1".into()));
        }
        let cfg_err = |e: &dyn fmt::Display| PipelineError::Config(e.to_string());
        let taxonomies = match &config.paths.taxonomies {
            Some(dir) => load_taxonomies(dir).map_err(|e| cfg_err(&e))?,
            None => Taxonomies::stock(),
        };
        let templates = match &config.paths.prompts {
            Some(dir) => PromptTemplates::load_dir(dir).map_err(PipelineError::io(dir))?,
            None => PromptTemplates::stock(),
        };
        let lexicon = match &config.paths.lexicon {
            Some(p) => Lexicon::load(p).map_err(|e| cfg_err(&e))?,
            None => Lexicon::stock(),
        };
        lexicon.validate(&taxonomies.frames).map_err(|e| cfg_err(&e))?;
        let gazetteer = match &config.paths.gazetteer {
            Some(p) => Gazetteer::load(p).map_err(|e| cfg_err(&e))?,
            None => Gazetteer::stock(),
        };
        let stopwords = match &config.paths.stopwords {
            Some(p) => Stopwords::load(p).map_err(PipelineError::io(p))?,
            None => Stopwords::stock(),
        };
        let mut p = Pipeline {
            config,
            options,
            taxonomies,
            templates,
            lexicon,
            gazetteer,
            stopwords,
            manifest: RunManifest {
                manifest_hash: String::new(),
                config_hash: String::new(),
                corpus_digest: String::new(),
                resource_digests: BTreeMap::new(),
                stage_versions: BTreeMap::new(),
                backends: Backends { model: String::new(), occurrence_source: String::new(), lexicon: None },
                deviation_notes: Vec::new(),
                created_at: String::new(),
                updated_at: String::new(),
                stages: BTreeMap::new(),
            },
        };
        p.manifest = p.fresh_manifest()?;
        if let Some(old) = RunManifest::load(&p.config.paths.output_dir) {
            if old.manifest_hash == p.manifest.manifest_hash {
                p.manifest.created_at = old.created_at;
                p.manifest.stages = old.stages;
            } else {
                log::warn!("inputs changed since the last run ({} -> {}); stage records reset", old.manifest_hash, p.manifest.manifest_hash);
            }
        }
        Ok(p)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn taxonomies(&self) -> &Taxonomies {
        &self.taxonomies
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn manifest_hash(&self) -> &str {
        &self.manifest.manifest_hash
    }

    pub fn output_dir(&self) -> &Path {
        &self.config.paths.output_dir
    }

    pub fn artifact(&self, rel: &str) -> PathBuf {
        self.config.paths.output_dir.join(rel)
    }

    fn concurrency(&self) -> usize {
        self.options.concurrency.unwrap_or(self.config.concurrency).max(1)
    }

    fn regions(&self) -> Vec<Region> {
        match self.options.region {
            Some(r) => vec![r],
            None => Region::ALL.to_vec(),
        }
    }

    /// Whether `stage` is part of a full run under this configuration.
    pub fn enabled(&self, stage: Stage) -> bool {
        let t = &self.config.stages;
        match stage {
            Stage::ClassifyGeneric => t.generic,
            Stage::ExtractIndicators => t.indicators,
            Stage::TagFrames => t.frames,
            Stage::Eval => t.eval && t.generic && self.config.paths.gold.is_some(),
            _ => true,
        }
    }

    pub fn run_stage(&mut self, stage: Stage) -> Result<StageReport, PipelineError> {
        log::info!("stage {stage}");
        let report = match stage {
            Stage::Ingest => self.run_ingest()?,
            Stage::Filter => self.run_filter()?,
            Stage::ClassifyGeneric => self.run_classify()?,
            Stage::ExtractIndicators => self.run_extract()?,
            Stage::TagFrames => self.run_tag()?,
            Stage::Aggregate => self.run_aggregate()?,
            Stage::Eval => self.run_eval()?,
            Stage::Report => self.run_report()?,
        };
        let now = now_timestamp();
        self.manifest.stages.insert(
            stage.name().to_string(),
            StageRecord { version: stage.version(), completed_at: now.clone(), counts: report.counts.clone() },
        );
        if self.manifest.created_at.is_empty() {
            self.manifest.created_at = now.clone();
        }
        self.manifest.updated_at = now;
        self.manifest.save(self.output_dir()).map_err(PipelineError::io(self.output_dir()))?;
        Ok(report)
    }

    /// Runs every enabled stage in order. Endpoint failures are counted, not fatal.
    pub fn run_all(&mut self) -> Result<Vec<StageReport>, PipelineError> {
        let mut out = Vec::new();
        for stage in Stage::ALL {
            if self.enabled(stage) {
                out.push(self.run_stage(stage)?);
            } else {
                log::info!("stage {stage} skipped");
            }
        }
        Ok(out)
    }

    /// Path of an upstream artifact, or an error naming the stage that produces it.
    fn require(&self, stage: Stage) -> Result<PathBuf, PipelineError> {
        let p = self.artifact(stage.primary_output());
        if p.exists() {
            Ok(p)
        } else {
            Err(PipelineError::MissingArtifact { stage, path: p.display().to_string() })
        }
    }

    /// The stage's own input: `--stage-input` when given, else the artifact of `upstream`.
    fn primary_input(&self, upstream: Stage) -> Result<PathBuf, PipelineError> {
        match &self.options.stage_input {
            Some(p) if p.exists() => Ok(p.clone()),
            Some(p) => Err(PipelineError::Config(format!("--stage-input {} does not exist", p.display()))),
            None => self.require(upstream),
        }
    }

    fn endpoint(&self) -> Result<EndpointConfig, PipelineError> {
        if let Some(url) = &self.options.mock_endpoint {
            let mut ep = match &self.config.endpoint {
                Some(e) => EndpointConfig { base_url: url.clone(), ..e.clone() },
                None => EndpointConfig { initial_backoff_ms: 20, max_backoff_ms: 200, ..EndpointConfig::new(url.clone()) },
            };
            ep.max_in_flight = ep.max_in_flight.max(self.concurrency());
            return Ok(ep.with_env_key());
        }
        let ep = self
            .config
            .endpoint
            .clone()
            .ok_or_else(|| PipelineError::Config("no [endpoint] configured and no --mock-endpoint given".into()))?
            .with_env_key();
        if ep.api_key.is_none() {
            return Err(PipelineError::Config(format!("{} is not set", crate::llm_gateway::API_KEY_ENV)));
        }
        Ok(ep)
    }

    fn header(&self, stage: Stage) -> Value {
        json!({"manifest_hash": self.manifest_hash(), "stage": stage.name(), "stage_version": stage.version()})
    }

    fn write_jsonl<T: Serialize>(&self, stage: Stage, rel: &str, records: &[T]) -> Result<usize, PipelineError> {
        let p = self.artifact(rel);
        crate::jsonl::write_records(&p, Some(&self.header(stage)), records).map_err(PipelineError::io(&p))
    }

    /// Pretty JSON document `{"manifest_hash", "stage", "data"}`.
    fn write_json<T: Serialize>(&self, stage: Stage, rel: &str, data: &T) -> Result<(), PipelineError> {
        let doc = json!({
            "manifest_hash": self.manifest_hash(),
            "stage": stage.name(),
            "data": serde_json::to_value(data).expect("artifact serializes"),
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("artifact serializes");
        text.push('\n');
        self.write_text(rel, &text)
    }

    /// CSV with a leading `# manifest_hash=` comment line. Returns the row count.
    fn write_csv(&self, rel: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<usize, PipelineError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| PipelineError::Data { path: rel.to_string(), message: e.to_string() };
        w.write_record(columns).map_err(err)?;
        for r in rows {
            w.write_record(r).map_err(err)?;
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8");
        self.write_text(rel, &format!("# manifest_hash={}\n{body}", self.manifest_hash()))?;
        Ok(rows.len())
    }

    fn write_text(&self, rel: &str, text: &str) -> Result<(), PipelineError> {
        let p = self.artifact(rel);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).map_err(PipelineError::io(dir))?;
        }
        std::fs::write(&p, text).map_err(PipelineError::io(&p))
    }

    fn read_jsonl<T: serde::de::DeserializeOwned>(&self, path: &Path) -> Result<Vec<T>, PipelineError> {
        let (header, records) = crate::jsonl::read_records(path).map_err(|e| PipelineError::Data {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if let Some(h) = header.as_ref().and_then(|h| h.get("manifest_hash")).and_then(Value::as_str) {
            if h != self.manifest_hash() {
                log::warn!("{} was written under manifest {h}; current inputs hash to {}", path.display(), self.manifest_hash());
            }
        }
        Ok(records)
    }

    fn fresh_manifest(&self) -> Result<RunManifest, PipelineError> {
        let c = &self.config;
        let semantic = json!({
            "corpus_format": c.paths.corpus_format,
            "gold_format": c.paths.gold_format,
            "filter": c.filter,
            "model": c.model,
            "stages": c.stages,
            "analysis": c.analysis,
        });
        let config_hash = sha_hex(semantic.to_string().as_bytes());
        let corpus_digest = self.corpus_digest()?;

        let mut resources = BTreeMap::new();
        let t = &self.taxonomies;
        let tax = json!({"generic": t.generic, "indicators": t.indicators, "frames": t.frames});
        resources.insert("taxonomy".to_string(), sha_hex(tax.to_string().as_bytes()));
        let tp = &self.templates;
        let prompts = [&tp.generic_system, &tp.generic_user, &tp.indicator_system, &tp.indicator_user]
            .map(String::as_str)
            .join("\0");
        resources.insert("prompts".to_string(), sha_hex(prompts.as_bytes()));
        let mut lex = String::new();
        for (frame, units) in &self.lexicon.frames {
            for u in units {
                lex.push_str(&format!("{frame}\t{}\t{}\n", u.lemma.join(" "), u.pos));
            }
        }
        let lexicon_digest = sha_hex(lex.as_bytes());
        resources.insert("lexicon".to_string(), lexicon_digest.clone());
        let gaz = serde_json::to_string(&self.gazetteer.groups).expect("gazetteer serializes");
        resources.insert("gazetteer".to_string(), sha_hex(gaz.as_bytes()));
        let sw: Vec<&str> = self.stopwords.words().collect();
        resources.insert("stopwords".to_string(), sha_hex(sw.join("\n").as_bytes()));
        let external = c.analysis.frame_backend == OccurrenceSource::External;
        for (name, path) in [("gold", c.paths.gold.as_ref()), ("external_occurrences", c.paths.external_occurrences.as_ref().filter(|_| external))] {
            if let Some(p) = path {
                let bytes = std::fs::read(p).map_err(PipelineError::io(p))?;
                resources.insert(name.to_string(), sha_hex(&bytes));
            }
        }

        let stage_versions: BTreeMap<String, u32> = Stage::ALL.iter().map(|s| (s.name().to_string(), s.version())).collect();
        let backends = Backends {
            model: c.model.model.clone(),
            occurrence_source: c.analysis.frame_backend.as_str().to_string(),
            lexicon: (!external).then_some(lexicon_digest),
        };
        let mut notes = vec![TOPIC_FILTER_NOTE.to_string(), CLUSTER_NOTE.to_string()];
        if !external {
            notes.push(LEXICON_NOTE.to_string());
        }
        let manifest_hash = sha_hex(
            json!({
                "config_hash": config_hash,
                "corpus_digest": corpus_digest,
                "resources": resources,
                "stage_versions": stage_versions,
                "backends": backends,
            })
            .to_string()
            .as_bytes(),
        );
        Ok(RunManifest {
            manifest_hash,
            config_hash,
            corpus_digest,
            resource_digests: resources,
            stage_versions,
            backends,
            deviation_notes: notes,
            created_at: String::new(),
            updated_at: String::new(),
            stages: BTreeMap::new(),
        })
    }

    /// Digest of the configured corpus that ignores record order.
    fn corpus_digest(&self) -> Result<String, PipelineError> {
        let outcome = ingest(&self.config.paths.corpus, self.config.paths.corpus_format)
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let mut hashes: Vec<String> = outcome
            .articles
            .iter()
            .map(|a| sha_hex(serde_json::to_string(a).expect("article serializes").as_bytes()))
            .collect();
        hashes.sort();
        hashes.push(format!("skipped={}", outcome.skipped_count()));
        Ok(sha_hex(hashes.join("\n").as_bytes()))
    }
}

pub fn sha_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
