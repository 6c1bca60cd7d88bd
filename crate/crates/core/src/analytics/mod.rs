//! Regional aggregations over classifier, extractor and tagger output.
//!
//! Every function here is a pure reduction whose result does not depend on input order:
//! counts are integers, and float sums run over id-sorted values.

mod cooccur;
mod shares;
mod targets;
mod temporal;
mod words;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use cooccur::{cooccurrence, CooccurrenceMatrix, CooccurrenceScope};
pub use shares::{
    frame_share, generic_frame_share, indicator_rate, role_distribution, EffectScope, IndicatorRates, RateVariant,
};
pub use targets::{cluster_targets, normalize_target, TargetCluster, JACCARD_THRESHOLD};
pub use temporal::{bin_start, temporal_series, TimeBin, TimeBinWidth};
pub use words::{render_word_table, top_words, Stopwords};

use crate::corpus::{Article, Region};
use crate::llm_gateway::{GenericFrameAssignment, IndicatorInstance};
use crate::semframe::{Gazetteer, SemanticFrameOccurrence};
use crate::taxonomy::{FrameInventory, IndicatorInventory};

pub const DEMONIZING_KINDS: [&str; 2] = ["war.language.demonizing_language", "war.language.dehumanizing_language"];
pub const ELITE_KIND: &str = "war.focus_on_elites";
pub const PEOPLE_KIND: &str = "peace.people_orientation";
/// Frames whose roles are summarized, plus the pooled "all" row.
pub const ROLE_FRAMES: [&str; 3] = ["Attack", "Killing", "all"];
pub const ROLE_LABELS: [&str; 2] = ["Assailant", "Victim"];

/// Per-region summary. `role_distribution` keys are `"<frame>/<role>"`, with frame `all`
/// pooling every frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionAggregate {
    pub region: Region,
    pub article_count: usize,
    pub token_total: usize,
    pub generic_frame_share: BTreeMap<String, f64>,
    pub indicator_rate: BTreeMap<String, f64>,
    pub frame_share: BTreeMap<String, f64>,
    pub role_distribution: BTreeMap<String, BTreeMap<String, f64>>,
    /// Articles left out of the rate mean because they have no tokens.
    pub zero_token_articles: usize,
    /// Generic assignments left out because the response was unusable.
    pub invalid_assignments: usize,
}

pub struct AggregateInputs<'a> {
    pub articles: &'a [Article],
    pub assignments: &'a [GenericFrameAssignment],
    pub instances: &'a [IndicatorInstance],
    pub occurrences: &'a [SemanticFrameOccurrence],
    pub indicators: &'a IndicatorInventory,
    pub frames: &'a FrameInventory,
    pub gazetteer: &'a Gazetteer,
    pub rate_variant: RateVariant,
}

impl AggregateInputs<'_> {
    fn ids_in(&self, region: Region) -> BTreeSet<&str> {
        self.articles.iter().filter(|a| a.region == region).map(|a| a.id.as_str()).collect()
    }
}

pub fn region_aggregate(inputs: &AggregateInputs<'_>, region: Region) -> RegionAggregate {
    let ids = inputs.ids_in(region);
    let articles: Vec<&Article> = inputs.articles.iter().filter(|a| a.region == region).collect();
    let assignments: Vec<&GenericFrameAssignment> =
        inputs.assignments.iter().filter(|a| ids.contains(a.article_id.as_str())).collect();
    let instances: Vec<&IndicatorInstance> =
        inputs.instances.iter().filter(|i| ids.contains(i.article_id.as_str())).collect();
    let occurrences: Vec<&SemanticFrameOccurrence> =
        inputs.occurrences.iter().filter(|o| ids.contains(o.article_id.as_str())).collect();
    let rates = indicator_rate(instances.iter().copied(), articles.iter().copied(), inputs.indicators, inputs.rate_variant);
    let mut role_dist = BTreeMap::new();
    for frame in ROLE_FRAMES {
        for role in ROLE_LABELS {
            let f = (frame != "all").then_some(frame);
            role_dist.insert(
                format!("{frame}/{role}"),
                role_distribution(occurrences.iter().copied(), inputs.gazetteer, f, role),
            );
        }
    }
    RegionAggregate {
        region,
        article_count: articles.len(),
        token_total: articles.iter().map(|a| a.token_count).sum(),
        generic_frame_share: generic_frame_share(assignments.iter().copied()),
        indicator_rate: rates.rates,
        frame_share: frame_share(occurrences.iter().copied(), inputs.frames, EffectScope::All),
        role_distribution: role_dist,
        zero_token_articles: rates.zero_token_articles,
        invalid_assignments: assignments.iter().filter(|a| !a.valid).count(),
    }
}

/// Instances that count as evidence: grounded ones only.
pub fn grounded<'a>(instances: impl IntoIterator<Item = &'a IndicatorInstance>) -> impl Iterator<Item = &'a IndicatorInstance> {
    instances.into_iter().filter(|i| i.grounded)
}

/// Reads a list of words, one per line; `#` starts a comment.
pub fn read_word_list(path: &Path) -> std::io::Result<Vec<String>> {
    Ok(parse_word_list(&std::fs::read_to_string(path)?))
}

pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}
