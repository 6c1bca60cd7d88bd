//! The aggregate stage: every regional analysis, each as JSON plus a CSV twin.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Pipeline, PipelineError, Stage, AGGREGATE_DIR};
use crate::analytics::{
    cluster_targets, cooccurrence, frame_share, region_aggregate, temporal_series, top_words, AggregateInputs,
    CooccurrenceMatrix, EffectScope, RegionAggregate, TargetCluster, TimeBin, DEMONIZING_KINDS, ELITE_KIND,
    PEOPLE_KIND,
};
use crate::corpus::{Article, Region};
use crate::llm_gateway::{GenericFrameAssignment, IndicatorInstance};
use crate::semframe::SemanticFrameOccurrence;

/// Map key for values pooled over every selected region.
pub const ALL_REGIONS_KEY: &str = "ALL";

const EFFECT_SCOPES: [(&str, EffectScope); 3] =
    [("all", EffectScope::All), ("visible", EffectScope::Visible), ("invisible", EffectScope::Invisible)];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionTopWords {
    pub elite: Vec<(String, usize)>,
    pub people: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateBundle {
    pub regions: Vec<RegionAggregate>,
    /// effect scope -> region key -> frame -> share
    pub frame_share: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>,
    /// region key -> clusters of demonizing/dehumanizing targets
    pub target_clusters: BTreeMap<String, Vec<TargetCluster>>,
    pub top_words: BTreeMap<String, RegionTopWords>,
    /// effect scope -> matrix
    pub cooccurrence: BTreeMap<String, CooccurrenceMatrix>,
    /// `indicators` (keyed by polarity) and `frames` (keyed by frame name)
    pub temporal_series: BTreeMap<String, Vec<TimeBin>>,
}

fn num(x: f64) -> String {
    format!("{x}")
}

impl Pipeline {
    pub(super) fn run_aggregate(&mut self) -> Result<super::StageReport, PipelineError> {
        let mut articles: Vec<Article> = self.read_jsonl(&self.primary_input(Stage::Filter)?)?;
        let t = self.config.stages;
        let mut assignments: Vec<GenericFrameAssignment> =
            if t.generic { self.read_jsonl(&self.require(Stage::ClassifyGeneric)?)? } else { Vec::new() };
        let mut instances: Vec<IndicatorInstance> =
            if t.indicators { self.read_jsonl(&self.require(Stage::ExtractIndicators)?)? } else { Vec::new() };
        let mut occurrences: Vec<SemanticFrameOccurrence> =
            if t.frames { self.read_jsonl(&self.require(Stage::TagFrames)?)? } else { Vec::new() };
        articles.sort_by(|a, b| a.id.cmp(&b.id));
        assignments.sort_by(|a, b| a.article_id.cmp(&b.article_id));
        instances.sort_by(|a, b| (&a.article_id, &a.kind_path, &a.excerpt).cmp(&(&b.article_id, &b.kind_path, &b.excerpt)));
        occurrences.sort();

        let bundle = self.aggregate(&articles, &assignments, &instances, &occurrences);
        self.write_bundle(&bundle)
    }

    /// Computes every analysis over the selected regions.
    pub fn aggregate(
        &self,
        articles: &[Article],
        assignments: &[GenericFrameAssignment],
        instances: &[IndicatorInstance],
        occurrences: &[SemanticFrameOccurrence],
    ) -> AggregateBundle {
        let regions = self.regions();
        let inputs = AggregateInputs {
            articles,
            assignments,
            instances,
            occurrences,
            indicators: &self.taxonomies.indicators,
            frames: &self.taxonomies.frames,
            gazetteer: &self.gazetteer,
            rate_variant: self.config.analysis.rate_variant,
        };
        let region_of: BTreeMap<&str, Region> = articles.iter().map(|a| (a.id.as_str(), a.region)).collect();
        let date_of: BTreeMap<&str, chrono::NaiveDate> =
            articles.iter().map(|a| (a.id.as_str(), a.published_at)).collect();
        let selected: BTreeSet<Region> = regions.iter().copied().collect();
        let in_key = |id: &str, key: Option<Region>| match region_of.get(id) {
            Some(r) => selected.contains(r) && key.map_or(true, |k| k == *r),
            None => false,
        };
        let keys: Vec<(String, Option<Region>)> = regions
            .iter()
            .map(|r| (r.as_str().to_string(), Some(*r)))
            .chain(std::iter::once((ALL_REGIONS_KEY.to_string(), None)))
            .collect();
        let grounded: Vec<&IndicatorInstance> = instances.iter().filter(|i| i.grounded).collect();

        let mut frame_shares = BTreeMap::new();
        for (name, scope) in EFFECT_SCOPES {
            let per_key = keys
                .iter()
                .map(|(k, r)| {
                    let occ = occurrences.iter().filter(|o| in_key(&o.article_id, *r));
                    (k.clone(), frame_share(occ, &self.taxonomies.frames, scope))
                })
                .collect();
            frame_shares.insert(name.to_string(), per_key);
        }

        let mut clusters = BTreeMap::new();
        let mut words = BTreeMap::new();
        let k = self.config.analysis.top_k;
        for (key, r) in &keys {
            let here: Vec<&IndicatorInstance> =
                grounded.iter().copied().filter(|i| in_key(&i.article_id, *r)).collect();
            let targets = here
                .iter()
                .filter(|i| DEMONIZING_KINDS.contains(&i.kind_path.as_str()))
                .filter_map(|i| i.target.as_deref())
                .filter(|t| !t.trim().is_empty());
            clusters.insert(key.clone(), cluster_targets(targets, *r));
            let excerpts = |kind: &str| {
                let texts: Vec<&str> = here.iter().filter(|i| i.kind_path == kind).map(|i| i.excerpt.as_str()).collect();
                top_words(texts, k, &self.stopwords)
            };
            words.insert(key.clone(), RegionTopWords { elite: excerpts(ELITE_KIND), people: excerpts(PEOPLE_KIND) });
        }

        let selected_occ: Vec<&SemanticFrameOccurrence> =
            occurrences.iter().filter(|o| in_key(&o.article_id, None)).collect();
        let cooc = EFFECT_SCOPES
            .iter()
            .map(|(name, scope)| {
                let m = cooccurrence(selected_occ.iter().copied(), self.config.analysis.cooccurrence_scope, *scope, &self.taxonomies.frames);
                (name.to_string(), m)
            })
            .collect();

        let width = self.config.analysis.time_bin;
        let polarity = |path: &str| path.split('.').next().unwrap_or(path).to_string();
        let ind_records: Vec<(chrono::NaiveDate, String)> = grounded
            .iter()
            .filter(|i| in_key(&i.article_id, None))
            .filter_map(|i| Some((*date_of.get(i.article_id.as_str())?, polarity(&i.kind_path))))
            .collect();
        let frame_records: Vec<(chrono::NaiveDate, &str)> = selected_occ
            .iter()
            .filter_map(|o| Some((*date_of.get(o.article_id.as_str())?, o.frame_name.as_str())))
            .collect();
        let mut temporal = BTreeMap::new();
        temporal.insert("indicators".to_string(), temporal_series(ind_records.iter().map(|(d, k)| (*d, k.as_str())), width));
        temporal.insert("frames".to_string(), temporal_series(frame_records, width));

        AggregateBundle {
            regions: regions.iter().map(|r| region_aggregate(&inputs, *r)).collect(),
            frame_share: frame_shares,
            target_clusters: clusters,
            top_words: words,
            cooccurrence: cooc,
            temporal_series: temporal,
        }
    }

    fn write_bundle(&self, b: &AggregateBundle) -> Result<super::StageReport, PipelineError> {
        let st = Stage::Aggregate;
        let mut report = super::StageReport { stage: st.name().to_string(), ..Default::default() };
        let mut emit = |name: &str, columns: &[&str], rows: Vec<Vec<String>>| -> Result<(), PipelineError> {
            let rel = format!("{AGGREGATE_DIR}/{name}.csv");
            let n = self.write_csv(&rel, columns, &rows)?;
            report.counts.insert(rel, n);
            Ok(())
        };
        let by_region = |f: &dyn Fn(&RegionAggregate) -> serde_json::Value| -> BTreeMap<String, serde_json::Value> {
            b.regions.iter().map(|r| (r.region.as_str().to_string(), f(r))).collect()
        };
        let dir = AGGREGATE_DIR;

        self.write_json(st, &format!("{dir}/region_summary.json"), &b.regions)?;
        emit(
            "region_summary",
            &["region", "article_count", "token_total", "zero_token_articles", "invalid_assignments"],
            b.regions
                .iter()
                .map(|r| {
                    vec![
                        r.region.to_string(),
                        r.article_count.to_string(),
                        r.token_total.to_string(),
                        r.zero_token_articles.to_string(),
                        r.invalid_assignments.to_string(),
                    ]
                })
                .collect(),
        )?;

        self.write_json(st, &format!("{dir}/generic_frame_share.json"), &by_region(&|r| serde_json::json!(r.generic_frame_share)))?;
        let mut rows = Vec::new();
        for r in &b.regions {
            for (label, v) in &r.generic_frame_share {
                rows.push(vec![r.region.to_string(), label.clone(), num(*v)]);
            }
        }
        emit("generic_frame_share", &["region", "label", "share"], rows)?;

        self.write_json(st, &format!("{dir}/indicator_rate.json"), &by_region(&|r| serde_json::json!(r.indicator_rate)))?;
        let mut rows = Vec::new();
        for r in &b.regions {
            for kind in &self.taxonomies.indicators.kinds {
                let v = r.indicator_rate.get(&kind.path).copied().unwrap_or(0.0);
                rows.push(vec![r.region.to_string(), kind.path.clone(), kind.polarity.as_str().to_string(), num(v)]);
            }
        }
        emit("indicator_rate", &["region", "kind_path", "polarity", "rate"], rows)?;

        self.write_json(st, &format!("{dir}/frame_share.json"), &b.frame_share)?;
        let mut rows = Vec::new();
        for (scope, per) in &b.frame_share {
            for (region, shares) in per {
                for (frame, v) in shares {
                    rows.push(vec![scope.clone(), region.clone(), frame.clone(), num(*v)]);
                }
            }
        }
        emit("frame_share", &["effect_scope", "region", "frame", "share"], rows)?;

        self.write_json(st, &format!("{dir}/role_distribution.json"), &by_region(&|r| serde_json::json!(r.role_distribution)))?;
        let mut rows = Vec::new();
        for r in &b.regions {
            for (key, groups) in &r.role_distribution {
                let (frame, role) = key.split_once('/').unwrap_or((key.as_str(), ""));
                for (group, v) in groups {
                    rows.push(vec![r.region.to_string(), frame.to_string(), role.to_string(), group.clone(), num(*v)]);
                }
            }
        }
        emit("role_distribution", &["region", "frame", "role", "group", "share"], rows)?;

        self.write_json(st, &format!("{dir}/target_clusters.json"), &b.target_clusters)?;
        let mut rows = Vec::new();
        for (region, clusters) in &b.target_clusters {
            for (i, c) in clusters.iter().enumerate() {
                rows.push(vec![region.clone(), (i + 1).to_string(), c.canonical_label.clone(), c.count.to_string(), c.members.join("; ")]);
            }
        }
        emit("target_clusters", &["region", "rank", "canonical_label", "count", "members"], rows)?;

        self.write_json(st, &format!("{dir}/top_words.json"), &b.top_words)?;
        let mut rows = Vec::new();
        for (region, tw) in &b.top_words {
            for (orientation, list) in [("elite", &tw.elite), ("people", &tw.people)] {
                for (i, (w, c)) in list.iter().enumerate() {
                    rows.push(vec![region.clone(), orientation.to_string(), (i + 1).to_string(), w.clone(), c.to_string()]);
                }
            }
        }
        emit("top_words", &["region", "orientation", "rank", "word", "count"], rows)?;

        self.write_json(st, &format!("{dir}/cooccurrence.json"), &b.cooccurrence)?;
        let mut rows = Vec::new();
        for (scope, m) in &b.cooccurrence {
            for (i, a) in m.frames.iter().enumerate() {
                for (j, bf) in m.frames.iter().enumerate() {
                    rows.push(vec![scope.clone(), a.clone(), bf.clone(), m.counts[i][j].to_string()]);
                }
            }
        }
        emit("cooccurrence", &["effect_scope", "frame_a", "frame_b", "count"], rows)?;

        self.write_json(st, &format!("{dir}/temporal_series.json"), &b.temporal_series)?;
        let mut rows = Vec::new();
        for (series, bins) in &b.temporal_series {
            for bin in bins {
                for (key, n) in &bin.counts {
                    rows.push(vec![series.clone(), bin.start.to_string(), key.clone(), n.to_string()]);
                }
            }
        }
        emit("temporal_series", &["series", "bin_start", "key", "count"], rows)?;
        Ok(report)
    }
}
