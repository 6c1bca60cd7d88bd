//! Pipeline configuration, read from TOML. Relative paths resolve against the directory
//! holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::analytics::{CooccurrenceScope, RateVariant, TimeBinWidth};
use crate::corpus::{FilterConfig, IngestFormat};
use crate::evalkit::GoldFormat;
use crate::llm_gateway::{EndpointConfig, PromptSettings};
use crate::semframe::{OccurrenceSource, TextScope};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus: PathBuf,
    #[serde(default)]
    pub corpus_format: IngestFormat,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Response cache; defaults to `<output_dir>/cache`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Directory with generic_frames.toml, indicators.toml and frames_of_interest.toml.
    #[serde(default)]
    pub taxonomies: Option<PathBuf>,
    /// Directory with the four prompt templates.
    #[serde(default)]
    pub prompts: Option<PathBuf>,
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    #[serde(default)]
    pub gazetteer: Option<PathBuf>,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    #[serde(default)]
    pub gold: Option<PathBuf>,
    #[serde(default)]
    pub gold_format: GoldFormat,
    /// Occurrence JSONL from an external frame parser, used when `frame_backend = "external"`.
    #[serde(default)]
    pub external_occurrences: Option<PathBuf>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageToggles {
    pub generic: bool,
    pub indicators: bool,
    pub frames: bool,
    pub eval: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles { generic: true, indicators: true, frames: true, eval: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub cooccurrence_scope: CooccurrenceScope,
    pub rate_variant: RateVariant,
    /// Article text read by the frame tagger: body or headline.
    pub frame_text_scope: TextScope,
    pub frame_backend: OccurrenceSource,
    pub time_bin: TimeBinWidth,
    pub top_k: usize,
    pub include_none_in_eval: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            cooccurrence_scope: CooccurrenceScope::Article,
            rate_variant: RateVariant::Mean,
            frame_text_scope: TextScope::Body,
            frame_backend: OccurrenceSource::Lexicon,
            time_bin: TimeBinWidth::Week,
            top_k: 10,
            include_none_in_eval: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub model: PromptSettings,
    #[serde(default)]
    pub endpoint: Option<EndpointConfig>,
    #[serde(default)]
    pub stages: StageToggles,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    /// Upper bound on articles processed at once.
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
}

fn default_concurrency() -> usize {
    4
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        PipelineConfig::from_toml(&text, &base)
    }

    /// Parses a config; relative paths are joined onto `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<PipelineConfig, PipelineError> {
        let mut c: PipelineConfig =
            toml::from_str(text).map_err(|e| PipelineError::Config(format!("invalid config: {e}")))?;
        c.resolve_paths(base_dir);
        Ok(c)
    }

    /// A config with stock resources for the given corpus and output directory.
    pub fn minimal(corpus: PathBuf, output_dir: PathBuf) -> PipelineConfig {
        PipelineConfig {
            paths: PathsConfig {
                corpus,
                corpus_format: IngestFormat::Jsonl,
                output_dir,
                cache_dir: None,
                taxonomies: None,
                prompts: None,
                lexicon: None,
                gazetteer: None,
                stopwords: None,
                gold: None,
                gold_format: GoldFormat::Jsonl,
                external_occurrences: None,
            },
            filter: FilterConfig::default(),
            model: PromptSettings::default(),
            endpoint: None,
            stages: StageToggles::default(),
            analysis: AnalysisConfig::default(),
            concurrency: default_concurrency(),
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let p = &mut self.paths;
        join(&mut p.corpus);
        join(&mut p.output_dir);
        for opt in [
            &mut p.cache_dir,
            &mut p.taxonomies,
            &mut p.prompts,
            &mut p.lexicon,
            &mut p.gazetteer,
            &mut p.stopwords,
            &mut p.gold,
            &mut p.external_occurrences,
        ] {
            if let Some(path) = opt.as_mut() {
                join(path);
            }
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.paths.cache_dir.clone().unwrap_or_else(|| self.paths.output_dir.join("cache"))
    }

    /// Checks bounds and that every referenced input exists.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let mut problems = Vec::new();
        if self.concurrency == 0 {
            problems.push("concurrency must be at least 1".to_string());
        }
        if self.analysis.top_k == 0 {
            problems.push("analysis.top_k must be at least 1".to_string());
        }
        if let Err(e) = self.filter.validate() {
            problems.push(format!("filter: {e}"));
        }
        let p = &self.paths;
        let inputs = [
            ("paths.corpus", Some(&p.corpus)),
            ("paths.taxonomies", p.taxonomies.as_ref()),
            ("paths.prompts", p.prompts.as_ref()),
            ("paths.lexicon", p.lexicon.as_ref()),
            ("paths.gazetteer", p.gazetteer.as_ref()),
            ("paths.stopwords", p.stopwords.as_ref()),
            ("paths.gold", p.gold.as_ref()),
            ("paths.external_occurrences", p.external_occurrences.as_ref()),
        ];
        for (name, path) in inputs {
            if let Some(path) = path {
                if !path.exists() {
                    problems.push(format!("{name}: {} does not exist", path.display()));
                }
            }
        }
        if self.analysis.frame_backend == OccurrenceSource::External && p.external_occurrences.is_none() {
            problems.push("analysis.frame_backend = \"external\" needs paths.external_occurrences".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(PipelineError::Config(problems.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_and_defaults() {
        let c = PipelineConfig::from_toml(
            "[paths]\ncorpus = \"data/a.jsonl\"\nlexicon = \"/abs/lex.toml\"\n\n[filter]\nlow_trim_fraction = 0.02\n",
            Path::new("/cfg"),
        )
        .unwrap();
        assert_eq!(c.paths.corpus, PathBuf::from("/cfg/data/a.jsonl"));
        assert_eq!(c.paths.output_dir, PathBuf::from("/cfg/out"));
        assert_eq!(c.paths.lexicon, Some(PathBuf::from("/abs/lex.toml")));
        assert_eq!(c.cache_dir(), PathBuf::from("/cfg/out/cache"));
        assert_eq!(c.filter.low_trim_fraction, 0.02);
        assert_eq!(c.filter.high_trim_fraction, 0.05);
        assert_eq!(c.filter.query_terms, FilterConfig::default().query_terms);
        assert_eq!(c.model.model, "command-r");
        assert_eq!(c.concurrency, 4);
        assert!(c.stages.generic);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(PipelineConfig::from_toml("[paths]\ncorpus = \"a\"\nbogus = 1\n", Path::new("/")).is_err());
        let c = PipelineConfig::from_toml("concurrency = 0\n[paths]\ncorpus = \"/nonexistent/a.jsonl\"\n", Path::new("/")).unwrap();
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("concurrency") && err.contains("does not exist"), "{err}");
    }
}
