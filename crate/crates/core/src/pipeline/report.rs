//! The report stage: SVG charts, the elite/people word table and a Markdown index.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde_json::Value;

use super::{AggregateBundle, Pipeline, PipelineError, RegionTopWords, Stage, StageReport, AGGREGATE_DIR, EVAL_DIR};
use super::{ALL_REGIONS_KEY, GENERIC_REPORT, INDICATOR_REPORT, REPORT_DIR};
use crate::analytics::{render_word_table, RegionAggregate, TargetCluster};
use crate::chart::{grouped_bar_chart, horizontal_bar_chart, Series};
use crate::semframe::OTHER_GROUP;
use crate::taxonomy::{EffectClass, Polarity};

/// Number of target clusters drawn.
const TOP_CLUSTERS: usize = 15;

impl Pipeline {
    fn read_data<T: DeserializeOwned>(&self, rel: &str) -> Result<T, PipelineError> {
        let p = self.artifact(rel);
        let bad = |message: String| PipelineError::Data { path: p.display().to_string(), message };
        let text = std::fs::read_to_string(&p).map_err(PipelineError::io(&p))?;
        let mut doc: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        serde_json::from_value(doc["data"].take()).map_err(|e| bad(e.to_string()))
    }

    fn read_bundle(&self) -> Result<AggregateBundle, PipelineError> {
        self.require(Stage::Aggregate)?;
        let d = AGGREGATE_DIR;
        Ok(AggregateBundle {
            regions: self.read_data(&format!("{d}/region_summary.json"))?,
            frame_share: self.read_data(&format!("{d}/frame_share.json"))?,
            target_clusters: self.read_data(&format!("{d}/target_clusters.json"))?,
            top_words: self.read_data(&format!("{d}/top_words.json"))?,
            cooccurrence: self.read_data(&format!("{d}/cooccurrence.json"))?,
            temporal_series: self.read_data(&format!("{d}/temporal_series.json"))?,
        })
    }

    pub(super) fn run_report(&mut self) -> Result<StageReport, PipelineError> {
        let b = self.read_bundle()?;
        let wanted: Vec<String> = self.regions().iter().map(|r| r.to_string()).collect();
        let regions: Vec<&RegionAggregate> = b.regions.iter().filter(|r| wanted.contains(&r.region.to_string())).collect();
        let names: Vec<String> = regions.iter().map(|r| r.region.to_string()).collect();
        let mut charts: Vec<(String, String)> = Vec::new();

        let by_region = |pick: &dyn Fn(&RegionAggregate, &str) -> f64, cats: &[String]| -> Vec<Series> {
            regions
                .iter()
                .map(|r| Series { name: r.region.to_string(), values: cats.iter().map(|c| pick(r, c)).collect() })
                .collect()
        };
        let get = |m: &BTreeMap<String, f64>, k: &str| m.get(k).copied().unwrap_or(0.0);

        let labels: Vec<String> = self.taxonomies.generic.labels().map(str::to_string).collect();
        let series = by_region(&|r, c| get(&r.generic_frame_share, c), &labels);
        charts.push(("generic_frames.svg".into(), grouped_bar_chart("Generic frames per region", &labels, &nonempty(series))));

        let kinds: Vec<String> = self.taxonomies.indicators.kinds.iter().map(|k| k.path.clone()).collect();
        let series = by_region(&|r, c| get(&r.indicator_rate, c), &kinds);
        charts.push((
            "indicator_rates.svg".into(),
            grouped_bar_chart("Indicator frequency per token, by kind and region", &kinds, &nonempty(series)),
        ));

        let polarity_sum = |r: &RegionAggregate, p: Polarity| -> f64 {
            self.taxonomies.indicators.of_polarity(p).map(|k| get(&r.indicator_rate, &k.path)).sum()
        };
        let war_peace: Vec<Series> = [Polarity::War, Polarity::Peace]
            .into_iter()
            .map(|p| Series {
                name: format!("{} indicators", p.as_str()),
                values: regions.iter().map(|r| polarity_sum(r, p)).collect(),
            })
            .collect();
        let wp = if regions.iter().any(|r| r.article_count > 0) { war_peace } else { Vec::new() };
        charts.push((
            "war_peace.svg".into(),
            grouped_bar_chart("Normalised frequency of war vs peace indicators per region", &names, &wp),
        ));

        for (file, scope, title, class) in [
            ("frame_share.svg", "all", "Relative frequency of semantic frames per region", None),
            ("visible_effects.svg", "visible", "Visible effects of war per region", Some(EffectClass::Visible)),
            ("invisible_effects.svg", "invisible", "Invisible effects of war per region", Some(EffectClass::Invisible)),
        ] {
            let frames: Vec<String> = self
                .taxonomies
                .frames
                .frames
                .iter()
                .filter(|f| class.map_or(true, |c| f.effect_class == c))
                .map(|f| f.frame_name.clone())
                .collect();
            let shares = b.frame_share.get(scope);
            let series: Vec<Series> = names
                .iter()
                .map(|n| Series {
                    name: n.clone(),
                    values: frames
                        .iter()
                        .map(|f| shares.and_then(|s| s.get(n)).map_or(0.0, |m| get(m, f)))
                        .collect(),
                })
                .collect();
            charts.push((file.into(), grouped_bar_chart(title, &frames, &nonempty(series))));
        }

        let mut groups: Vec<String> = self.gazetteer.groups.iter().map(|g| g.name.clone()).collect();
        if !groups.iter().any(|g| g == OTHER_GROUP) {
            groups.push(OTHER_GROUP.to_string());
        }
        for role in ["Assailant", "Victim"] {
            let key = format!("all/{role}");
            let series = by_region(&|r, g| r.role_distribution.get(&key).map_or(0.0, |m| get(m, g)), &groups);
            charts.push((
                format!("{}.svg", role.to_lowercase()),
                grouped_bar_chart(&format!("Relative frequencies of the {role} role by actor group"), &groups, &nonempty(series)),
            ));
        }

        let cluster_key = match self.options.region {
            Some(r) => r.to_string(),
            None => ALL_REGIONS_KEY.to_string(),
        };
        let clusters: &[TargetCluster] = b.target_clusters.get(&cluster_key).map_or(&[], Vec::as_slice);
        let items: Vec<(String, f64)> =
            clusters.iter().take(TOP_CLUSTERS).map(|c| (c.canonical_label.clone(), c.count as f64)).collect();
        charts.push((
            "target_clusters.svg".into(),
            horizontal_bar_chart("Most frequent targets of demonizing and dehumanizing language", &items),
        ));

        let mut columns = Vec::new();
        for n in &names {
            let tw = b.top_words.get(n).cloned().unwrap_or(RegionTopWords { elite: vec![], people: vec![] });
            columns.push((format!("{n} elite"), tw.elite));
            columns.push((format!("{n} people"), tw.people));
        }
        let word_table = render_word_table(&columns);

        let mut report = StageReport { stage: Stage::Report.name().to_string(), ..Default::default() };
        for (file, svg) in &charts {
            self.write_text(&format!("{REPORT_DIR}/{file}"), svg)?;
        }
        self.write_text(&format!("{REPORT_DIR}/word_table.txt"), &word_table)?;
        let md = self.markdown(&regions, &charts, &word_table, clusters)?;
        self.write_text(&format!("{REPORT_DIR}/report.md"), &md)?;
        report.status_counts.insert("charts".into(), charts.len());
        Ok(report)
    }

    fn markdown(
        &self,
        regions: &[&RegionAggregate],
        charts: &[(String, String)],
        word_table: &str,
        clusters: &[TargetCluster],
    ) -> Result<String, PipelineError> {
        let mut md = String::new();
        let _ = writeln!(md, "# Framing report\n");
        let _ = writeln!(md, "Manifest hash: `{}`\n", self.manifest_hash());
        if let Some(r) = self.options.region {
            let _ = writeln!(md, "Restricted to region {r}.\n");
        }
        let _ = writeln!(md, "## Corpus\n\n| region | articles | tokens | invalid assignments |\n|---|---:|---:|---:|");
        for r in regions {
            let _ = writeln!(md, "| {} | {} | {} | {} |", r.region, r.article_count, r.token_total, r.invalid_assignments);
        }
        for (title, rel) in [("Generic classification audit", GENERIC_REPORT), ("Indicator extraction audit", INDICATOR_REPORT)] {
            if let Ok(v) = self.read_data::<Value>(rel) {
                let _ = writeln!(md, "\n## {title}\n");
                if let Some(counts) = v["status_counts"].as_object() {
                    for (k, n) in counts {
                        let _ = writeln!(md, "- {k}: {n}");
                    }
                }
            }
        }
        let _ = writeln!(md, "\n## Charts\n");
        for (file, _) in charts {
            let _ = writeln!(md, "![{file}]({file})");
        }
        let _ = writeln!(md, "\n## Target clusters\n");
        if clusters.is_empty() {
            let _ = writeln!(md, "No targets.");
        }
        for c in clusters.iter().take(TOP_CLUSTERS) {
            let _ = writeln!(md, "- {} ({}): {}", c.canonical_label, c.count, c.members.join(", "));
        }
        let _ = writeln!(md, "\n## Most common words in elite and people centric instances\n\n```\n{word_table}```");
        let metrics = self.artifact(&format!("{EVAL_DIR}/metrics.txt"));
        if let Ok(text) = std::fs::read_to_string(&metrics) {
            let _ = writeln!(md, "\n## Generic frame classifier evaluation\n\n```\n{text}```");
        }
        Ok(md)
    }
}

/// Drops all-zero inputs so an empty aggregate renders as a "no data" placeholder.
fn nonempty(series: Vec<Series>) -> Vec<Series> {
    if series.iter().all(|s| s.values.iter().all(|v| *v == 0.0)) {
        Vec::new()
    } else {
        series
    }
}
