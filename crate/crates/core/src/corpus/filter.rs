use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Article, CorpusError, Region};
use crate::text::{contains_sequence, folded_tokens};

/// Titles matching every term of one set are excluded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExclusionSet {
    pub name: String,
    pub terms: Vec<String>,
}

/// Missing fields take their values from [`FilterConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub allowed_domains: BTreeMap<Region, BTreeSet<String>>,
    pub query_terms: Vec<String>,
    #[serde(default)]
    pub exclusion_keyword_sets: Vec<ExclusionSet>,
    pub date_min: NaiveDate,
    pub date_max: NaiveDate,
    #[serde(default = "default_low")]
    pub low_trim_fraction: f64,
    #[serde(default = "default_high")]
    pub high_trim_fraction: f64,
    /// Trim each region's length distribution separately instead of the pooled corpus.
    #[serde(default)]
    pub trim_per_region: bool,
}

fn default_low() -> f64 {
    0.01
}

fn default_high() -> f64 {
    0.05
}

impl Default for FilterConfig {
    fn default() -> Self {
        let domains = |list: &[&str]| list.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        let mut allowed_domains = BTreeMap::new();
        allowed_domains.insert(
            Region::UK,
            domains(&[
                "dailymail.co.uk",
                "independent.co.uk",
                "theguardian.com",
                "bbc.co.uk",
                "huffingtonpost.co.uk",
                "telegraph.co.uk",
            ]),
        );
        allowed_domains.insert(
            Region::US,
            domains(&["nytimes.com", "cbsnews.com", "foxnews.com", "nypost.com", "npr.org", "breitbart.com"]),
        );
        allowed_domains.insert(
            Region::ME,
            domains(&[
                "almanar.com.lb",
                "mehrnews.com",
                "egyptindependent.com",
                "cumhuriyet.com.tr",
                "arabnews.com",
                "dohanews.co",
                "sana.sy",
            ]),
        );
        FilterConfig {
            allowed_domains,
            query_terms: ["Gaza", "Palestine", "Israel", "Hamas", "Israel Defence Forces"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            exclusion_keyword_sets: vec![ExclusionSet {
                name: "lebanon-strikes".into(),
                terms: vec!["Lebanon".into(), "bombing".into()],
            }],
            date_min: NaiveDate::from_ymd_opt(2023, 10, 1).unwrap(),
            date_max: NaiveDate::from_ymd_opt(2024, 2, 29).unwrap(),
            low_trim_fraction: default_low(),
            high_trim_fraction: default_high(),
            trim_per_region: false,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        check_trim(self.low_trim_fraction, self.high_trim_fraction)?;
        if self.date_min > self.date_max {
            return Err(CorpusError::InvalidDateRange { min: self.date_min, max: self.date_max });
        }
        if self.query_terms.iter().all(|t| t.trim().is_empty()) {
            return Err(CorpusError::NoQueryTerms);
        }
        Ok(())
    }
}

fn check_trim(low: f64, high: f64) -> Result<(), CorpusError> {
    if !(low >= 0.0 && high >= 0.0 && low + high < 1.0) {
        return Err(CorpusError::InvalidTrim { low, high });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub domain: usize,
    pub keyword: usize,
    pub topic: usize,
    pub date: usize,
    pub length: usize,
}

impl StageCounts {
    pub fn total(&self) -> usize {
        self.domain + self.keyword + self.topic + self.date + self.length
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub notes: Vec<String>,
    pub input_count: usize,
    pub dropped: StageCounts,
    pub dropped_by_region: BTreeMap<Region, StageCounts>,
    pub retained: usize,
    pub retained_by_region: BTreeMap<Region, usize>,
}

impl FilterReport {
    /// `input = retained + dropped`, overall and per region.
    pub fn reconciles(&self) -> bool {
        let regional_ok = self.retained_by_region.iter().all(|(r, kept)| {
            let dropped = self.dropped_by_region.get(r).copied().unwrap_or_default();
            *kept + dropped.total() <= self.input_count
        });
        let region_sum: usize = self.retained_by_region.values().sum();
        self.input_count == self.retained + self.dropped.total() && region_sum == self.retained && regional_ok
    }
}

pub const TOPIC_FILTER_NOTE: &str = "topic filter: named conjunctive keyword-exclusion sets over titles \
     stand in for neural topic modelling";

/// Keeps articles whose domain is allowlisted for their own region.
pub fn filter_domain(articles: Vec<Article>, config: &FilterConfig) -> (Vec<Article>, usize) {
    retain(articles, |a| {
        config
            .allowed_domains
            .get(&a.region)
            .is_some_and(|set| set.iter().any(|d| d.eq_ignore_ascii_case(&a.domain)))
    })
}

/// Keeps articles whose title or body contains at least one query term as whole words,
/// ignoring case. Multi-word terms must match a contiguous token run.
pub fn filter_keywords(articles: Vec<Article>, query_terms: &[String]) -> (Vec<Article>, usize) {
    let terms: Vec<Vec<String>> = query_terms.iter().map(|t| folded_tokens(t)).filter(|t| !t.is_empty()).collect();
    retain(articles, |a| {
        let title = folded_tokens(&a.title);
        let body = folded_tokens(&a.body);
        terms.iter().any(|t| contains_sequence(&title, t) || contains_sequence(&body, t))
    })
}

/// Drops articles whose title contains every term of any one exclusion set.
pub fn filter_topic_exclusion(articles: Vec<Article>, sets: &[ExclusionSet]) -> (Vec<Article>, usize) {
    let sets: Vec<Vec<Vec<String>>> = sets
        .iter()
        .map(|s| s.terms.iter().map(|t| folded_tokens(t)).filter(|t| !t.is_empty()).collect::<Vec<_>>())
        .filter(|terms| !terms.is_empty())
        .collect();
    retain(articles, |a| {
        let title = folded_tokens(&a.title);
        !sets.iter().any(|set| set.iter().all(|t| contains_sequence(&title, t)))
    })
}

/// Keeps articles published within `[date_min, date_max]`, both ends inclusive.
pub fn filter_dates(articles: Vec<Article>, date_min: NaiveDate, date_max: NaiveDate) -> (Vec<Article>, usize) {
    retain(articles, |a| a.published_at >= date_min && a.published_at <= date_max)
}

/// Drops the `floor(n * low)` shortest and `floor(n * high)` longest articles by token count.
///
/// Ties are ordered by id. Survivors keep their input order.
pub fn trim_length_percentiles(
    articles: Vec<Article>,
    low_frac: f64,
    high_frac: f64,
) -> Result<(Vec<Article>, usize), CorpusError> {
    check_trim(low_frac, high_frac)?;
    let n = articles.len();
    let n_low = floor_count(n, low_frac);
    let n_high = floor_count(n, high_frac);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&articles[i], &articles[j]);
        a.token_count.cmp(&b.token_count).then_with(|| a.id.cmp(&b.id))
    });
    let mut keep = vec![false; n];
    for &i in &order[n_low..n - n_high] {
        keep[i] = true;
    }
    let kept: Vec<Article> = articles.into_iter().zip(keep).filter_map(|(a, k)| k.then_some(a)).collect();
    let dropped = n - kept.len();
    Ok((kept, dropped))
}

// Fractions come from decimal config values; the epsilon keeps e.g. 0.29 * 100 at 29.
fn floor_count(n: usize, frac: f64) -> usize {
    ((n as f64) * frac + 1e-9).floor() as usize
}

fn retain(articles: Vec<Article>, keep: impl Fn(&Article) -> bool) -> (Vec<Article>, usize) {
    let n = articles.len();
    let kept: Vec<Article> = articles.into_iter().filter(|a| keep(a)).collect();
    let dropped = n - kept.len();
    (kept, dropped)
}

fn region_counts(articles: &[Article]) -> BTreeMap<Region, usize> {
    let mut m = BTreeMap::new();
    for a in articles {
        *m.entry(a.region).or_insert(0) += 1;
    }
    m
}

/// Runs domain, keyword, topic, date and length filtering in that order.
pub fn run_filters(articles: Vec<Article>, config: &FilterConfig) -> Result<(Vec<Article>, FilterReport), CorpusError> {
    config.validate()?;
    let mut report = FilterReport {
        notes: vec![TOPIC_FILTER_NOTE.to_string()],
        input_count: articles.len(),
        ..Default::default()
    };
    for r in region_counts(&articles).keys() {
        report.dropped_by_region.insert(*r, StageCounts::default());
    }

    fn record(
        report: &mut FilterReport,
        before: &BTreeMap<Region, usize>,
        after: &[Article],
        slot: fn(&mut StageCounts) -> &mut usize,
    ) {
        let after = region_counts(after);
        for (r, n) in before {
            let d = n - after.get(r).copied().unwrap_or(0);
            *slot(report.dropped_by_region.entry(*r).or_default()) += d;
            *slot(&mut report.dropped) += d;
        }
    }

    let before = region_counts(&articles);
    let (articles, _) = filter_domain(articles, config);
    record(&mut report, &before, &articles, |s| &mut s.domain);

    let before = region_counts(&articles);
    let (articles, _) = filter_keywords(articles, &config.query_terms);
    record(&mut report, &before, &articles, |s| &mut s.keyword);

    let before = region_counts(&articles);
    let (articles, _) = filter_topic_exclusion(articles, &config.exclusion_keyword_sets);
    record(&mut report, &before, &articles, |s| &mut s.topic);

    let before = region_counts(&articles);
    let (articles, _) = filter_dates(articles, config.date_min, config.date_max);
    record(&mut report, &before, &articles, |s| &mut s.date);

    let before = region_counts(&articles);
    let articles = if config.trim_per_region {
        let mut kept_ids = BTreeSet::new();
        for region in before.keys() {
            let group: Vec<Article> = articles.iter().filter(|a| a.region == *region).cloned().collect();
            let (kept, _) = trim_length_percentiles(group, config.low_trim_fraction, config.high_trim_fraction)?;
            kept_ids.extend(kept.into_iter().map(|a| a.id));
        }
        articles.into_iter().filter(|a| kept_ids.contains(&a.id)).collect()
    } else {
        trim_length_percentiles(articles, config.low_trim_fraction, config.high_trim_fraction)?.0
    };
    record(&mut report, &before, &articles, |s| &mut s.length);
    if config.trim_per_region {
        report.notes.push("length trim applied per region".to_string());
    }

    report.retained = articles.len();
    report.retained_by_region = region_counts(&articles);
    for r in report.dropped_by_region.keys() {
        report.retained_by_region.entry(*r).or_insert(0);
    }
    Ok((articles, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn art(id: &str, url: &str, region: Region, title: &str, body: &str) -> Article {
        Article::new(Some(id.into()), url, region, title, body, date(2023, 10, 10)).unwrap()
    }

    fn sized(id: &str, tokens: usize) -> Article {
        let mut a = art(id, "https://npr.org/x", Region::US, "t", "x");
        a.token_count = tokens;
        a
    }

    fn ids(v: &[Article]) -> Vec<&str> {
        v.iter().map(|a| a.id.as_str()).collect()
    }

    #[test]
    fn domain_allowlist_is_per_region() {
        let cfg = FilterConfig::default();
        let a = art("1", "https://www.theguardian.com/x", Region::UK, "t", "b");
        let b = art("2", "https://www.nytimes.com/x", Region::UK, "t", "b");
        let (kept, dropped) = filter_domain(vec![a, b], &cfg);
        assert_eq!(ids(&kept), ["1"]);
        assert_eq!(dropped, 1);

        let mut cfg = cfg;
        cfg.allowed_domains.insert(Region::UK, BTreeSet::new());
        let c = art("3", "https://www.bbc.co.uk/x", Region::UK, "t", "b");
        assert_eq!(filter_domain(vec![c], &cfg), (vec![], 1));
    }

    #[test]
    fn keyword_whole_word_match() {
        let terms = vec!["Gaza".to_string()];
        let a = art("1", "https://npr.org/a", Region::US, "Update", "…strikes on Gaza…");
        let b = art("2", "https://npr.org/b", Region::US, "Garden", "Gazania flowers");
        let c = art("3", "https://npr.org/c", Region::US, "Weather", "Sunny");
        let d = art("4", "https://npr.org/d", Region::US, "GAZA latest", "none");
        let (kept, dropped) = filter_keywords(vec![a, b, c, d], &terms);
        assert_eq!(ids(&kept), ["1", "4"]);
        assert_eq!(dropped, 2);
    }

    #[test]
    fn multiword_query_term() {
        let terms = vec!["Israel Defence Forces".to_string()];
        let a = art("1", "https://npr.org/a", Region::US, "t", "The Israel Defence Forces said");
        let b = art("2", "https://npr.org/b", Region::US, "t", "Israel said its Defence Forces");
        assert_eq!(ids(&filter_keywords(vec![a, b], &terms).0), ["1"]);
    }

    #[test]
    fn topic_exclusion_is_conjunctive() {
        let sets = vec![ExclusionSet { name: "lebanon".into(), terms: vec!["Lebanon".into(), "bombing".into()] }];
        let a = art("1", "https://npr.org/a", Region::US, "Israel bombing in Lebanon border town", "b");
        let b = art("2", "https://npr.org/b", Region::US, "Gaza ceasefire talks resume", "b");
        let c = art("3", "https://npr.org/c", Region::US, "Lebanon talks", "b");
        let (kept, dropped) = filter_topic_exclusion(vec![a, b, c], &sets);
        assert_eq!(ids(&kept), ["2", "3"]);
        assert_eq!(dropped, 1);

        let a = art("1", "https://npr.org/a", Region::US, "Israel bombing in Lebanon border town", "b");
        assert_eq!(filter_topic_exclusion(vec![a], &[]).1, 0);
    }

    #[test]
    fn date_bounds_are_inclusive() {
        let min = date(2023, 10, 1);
        let max = date(2024, 2, 29);
        let mk = |id: &str, d| {
            let mut a = art(id, "https://npr.org/a", Region::US, "t", "b");
            a.published_at = d;
            a
        };
        let v = vec![mk("1", date(2023, 9, 15)), mk("2", min), mk("3", max), mk("4", date(2024, 3, 1))];
        let (kept, dropped) = filter_dates(v, min, max);
        assert_eq!(ids(&kept), ["2", "3"]);
        assert_eq!(dropped, 2);
    }

    #[test]
    fn trim_floor_semantics() {
        let v: Vec<Article> = (0..50).map(|i| sized(&format!("{i:02}"), i + 1)).collect();
        let (kept, dropped) = trim_length_percentiles(v, 0.01, 0.05).unwrap();
        // floor(0.5) = 0 shortest, floor(2.5) = 2 longest.
        assert_eq!(dropped, 2);
        assert_eq!(kept.first().unwrap().token_count, 1);
        assert_eq!(kept.last().unwrap().token_count, 48);
    }

    #[test]
    fn trim_ties_break_by_id() {
        // Input order deliberately differs from id order.
        let v: Vec<Article> = (0..100).rev().map(|i| sized(&format!("a{i:03}"), 7)).collect();
        let (kept, dropped) = trim_length_percentiles(v, 0.01, 0.05).unwrap();
        assert_eq!(dropped, 6);
        let gone: BTreeSet<String> = (0..100)
            .map(|i| format!("a{i:03}"))
            .filter(|id| !kept.iter().any(|a| &a.id == id))
            .collect();
        let expected: BTreeSet<String> =
            ["a000", "a095", "a096", "a097", "a098", "a099"].iter().map(|s| s.to_string()).collect();
        assert_eq!(gone, expected);
        // Survivors keep input (descending) order.
        assert_eq!(kept[0].id, "a094");
        assert_eq!(kept.last().unwrap().id, "a001");
    }

    #[test]
    fn trim_rejects_bad_fractions() {
        assert!(matches!(trim_length_percentiles(vec![], 0.5, 0.5), Err(CorpusError::InvalidTrim { .. })));
        assert!(trim_length_percentiles(vec![], -0.1, 0.0).is_err());
        assert_eq!(trim_length_percentiles(vec![], 0.01, 0.05).unwrap().1, 0);
    }

    #[test]
    fn pipeline_report_reconciles() {
        let mut v = vec![
            art("1", "https://www.bbc.co.uk/a", Region::UK, "Gaza", "Gaza body"),
            art("2", "https://www.nytimes.com/a", Region::UK, "Gaza", "Gaza body"),
            art("3", "https://www.npr.org/a", Region::US, "Sports", "Football"),
            art("4", "https://www.npr.org/b", Region::US, "Israel bombing in Lebanon", "Israel"),
            art("5", "https://www.arabnews.com/b", Region::ME, "Hamas", "Hamas statement"),
        ];
        v[4].published_at = date(2023, 9, 1);
        let (kept, report) = run_filters(v, &FilterConfig::default()).unwrap();
        assert_eq!(ids(&kept), ["1"]);
        assert_eq!(report.dropped, StageCounts { domain: 1, keyword: 1, topic: 1, date: 1, length: 0 });
        assert_eq!(report.retained_by_region[&Region::ME], 0);
        assert_eq!(report.dropped_by_region[&Region::US].total(), 2);
        assert!(report.reconciles());
        assert!(report.notes[0].contains("keyword-exclusion"));
    }

    #[test]
    fn config_validation() {
        let mut cfg = FilterConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.date_min = date(2025, 1, 1);
        assert!(matches!(cfg.validate(), Err(CorpusError::InvalidDateRange { .. })));
        let mut cfg = FilterConfig::default();
        cfg.low_trim_fraction = 0.6;
        cfg.high_trim_fraction = 0.4;
        assert!(cfg.validate().is_err());
    }
}
