//! Deterministic fixtures for end-to-end runs: a 100-article corpus and a scripted chat
//! endpoint that answers from the article number embedded in each body.
//!
//! Article `i` carries the marker `Report aNNN`. Its generic reply is unparseable when
//! `i % 10 == 3` and names only an unknown label when `i % 10 == 7`. Its indicator reply is
//! unparseable when `i % 10 == 3`; otherwise it quotes one body sentence for every war kind,
//! quotes the people sentence for the people-orientation kind when `i` is even, and adds one
//! paraphrase that does not ground.

use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate};
use serde_json::{json, Map, Value};

use crate::corpus::{Article, Region};
use crate::llm_gateway::mock::{MockReply, MockRequest};
use crate::taxonomy::{IndicatorInventory, Polarity, Taxonomies};

pub const FIXTURE_SIZE: usize = 100;

pub const ATTACK_SENTENCE: &str = "Hamas attacked the kibbutz at dawn.";
pub const STRIKE_SENTENCE: &str = "Israeli forces bombed Jabalia camp overnight.";
pub const TOLL_SENTENCE: &str = "The death toll rose as families fled the shelling.";
pub const ELITE_SENTENCE: &str = "President Biden said the administration stands with Israel.";
pub const PEOPLE_SENTENCE: &str = "Families in Rafah described fleeing their homes with nothing.";
pub const DEMONIZING_SENTENCE: &str = "One official called them animals in a televised address.";
pub const FILLER_SENTENCE: &str = "Aid trucks waited at the crossing for hours.";
/// Quoted by every indicator reply, found in no body.
pub const PARAPHRASE: &str = "the ceasefire talks collapsed entirely";

const TARGETS: [&str; 5] = ["Hamas", "Hamas militants", "the Hamas", "Israeli army", "the Israeli armies"];

const GENERIC_ROTATION: [&[&str]; 4] = [
    &["Security and defense", "Political"],
    &["Crime and punishment"],
    &["Health and safety", "Security and defense"],
    &["Political"],
];

pub fn is_malformed(i: usize) -> bool {
    i % 10 == 3
}

pub fn is_invalid(i: usize) -> bool {
    i % 10 == 7
}

pub fn region_of(i: usize) -> Region {
    Region::ALL[i % 3]
}

/// Filler sentences in article `i`: a permutation of 0..100, so body lengths are distinct.
pub fn filler_count(i: usize) -> usize {
    (i * 37 + 13) % 100
}

pub fn fixture_article(i: usize) -> Article {
    let region = region_of(i);
    let domain = match region {
        Region::US => "nytimes.com",
        Region::UK => "theguardian.com",
        Region::ME => "arabnews.com",
    };
    let mut body = vec![format!("Report a{i:03} from the Gaza Strip.")];
    body.extend([ATTACK_SENTENCE, STRIKE_SENTENCE, TOLL_SENTENCE, ELITE_SENTENCE, PEOPLE_SENTENCE, DEMONIZING_SENTENCE].map(String::from));
    body.extend(std::iter::repeat(FILLER_SENTENCE.to_string()).take(filler_count(i)));
    let date = NaiveDate::from_ymd_opt(2023, 10, 7).unwrap() + Duration::days((i % 60) as i64);
    Article::new(
        Some(format!("a{i:03}")),
        &format!("https://www.{domain}/2023/report-a{i:03}"),
        region,
        &format!("Gaza report {i}"),
        &body.join(" "),
        date,
    )
    .expect("fixture article is valid")
}

pub fn fixture_articles() -> Vec<Article> {
    (0..FIXTURE_SIZE).map(fixture_article).collect()
}

/// Labels the generic reply for article `i` carries (empty for scripted failures).
pub fn generic_labels(i: usize) -> Vec<&'static str> {
    if is_malformed(i) || is_invalid(i) {
        return Vec::new();
    }
    GENERIC_ROTATION[i % GENERIC_ROTATION.len()].to_vec()
}

pub fn generic_reply(i: usize) -> String {
    if is_malformed(i) {
        return "I am unable to classify this article.".to_string();
    }
    if is_invalid(i) {
        return json!({"frames-list": ["Weather"], "reason": "forecast coverage"}).to_string();
    }
    let body = json!({"frames-list": generic_labels(i), "reason": format!("report {i}")});
    format!("```json\n{body}\n```")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureInstance {
    pub kind_path: String,
    pub excerpt: String,
    pub target: Option<String>,
    pub grounded: bool,
}

/// Target quoted for the demonizing and dehumanizing kinds of article `i`.
pub fn target_of(i: usize) -> &'static str {
    TARGETS[i % TARGETS.len()]
}

/// Every instance the indicator reply for article `i` contains.
pub fn indicator_instances(i: usize, inventory: &IndicatorInventory) -> Vec<FixtureInstance> {
    if is_malformed(i) {
        return Vec::new();
    }
    let mut out = Vec::new();
    for kind in inventory.of_polarity(Polarity::War) {
        let excerpt = match kind.path.as_str() {
            "war.focus_on_elites" => ELITE_SENTENCE,
            p if p.starts_with("war.language.") => DEMONIZING_SENTENCE,
            "war.focus_on_visible_effects_of_war" => TOLL_SENTENCE,
            _ => ATTACK_SENTENCE,
        };
        let target = kind.has_target.then(|| {
            if kind.path.ends_with("demonizing_language") || kind.path.ends_with("dehumanizing_language") {
                target_of(i).to_string()
            } else {
                "Hamas".to_string()
            }
        });
        out.push(FixtureInstance { kind_path: kind.path.clone(), excerpt: excerpt.into(), target, grounded: true });
    }
    if i % 2 == 0 {
        out.push(FixtureInstance {
            kind_path: "peace.people_orientation".into(),
            excerpt: PEOPLE_SENTENCE.into(),
            target: Some("civilians".into()),
            grounded: true,
        });
    }
    out.push(FixtureInstance {
        kind_path: "war.partisan_framing".into(),
        excerpt: PARAPHRASE.into(),
        target: Some("Israel".into()),
        grounded: false,
    });
    out
}

pub fn indicator_reply(i: usize, inventory: &IndicatorInventory) -> String {
    if is_malformed(i) {
        return "Sorry, the article could not be analysed.".to_string();
    }
    let mut root = Map::new();
    for p in [Polarity::War, Polarity::Peace] {
        root.insert(inventory.top_key(p).to_string(), Value::Object(Map::new()));
    }
    for inst in indicator_instances(i, inventory) {
        let kind = inventory.get(&inst.kind_path).expect("fixture kinds exist");
        let mut node = root.get_mut(inventory.top_key(kind.polarity)).unwrap();
        let keys = kind.keys();
        for key in &keys[..keys.len() - 1] {
            node = node.as_object_mut().unwrap().entry(key.to_string()).or_insert_with(|| json!({}));
        }
        let entry = match (kind.has_target, kind.has_reasoning) {
            (false, false) => json!(inst.excerpt),
            (true, false) => json!([inst.excerpt, inst.target]),
            (_, true) => json!([inst.excerpt, inst.target, "scripted"]),
        };
        let leaf = node.as_object_mut().unwrap().entry(keys[keys.len() - 1].to_string()).or_insert_with(|| json!([]));
        leaf.as_array_mut().unwrap().push(entry);
    }
    Value::Object(root).to_string()
}

/// Article number from the `Report aNNN` marker.
pub fn article_number(text: &str) -> Option<usize> {
    let at = text.find("Report a")? + "Report a".len();
    text.get(at..at + 3)?.parse().ok()
}

/// Handler for [`MockServer::start`](crate::llm_gateway::mock::MockServer::start) answering
/// both prompts for the stock taxonomy.
pub fn mock_handler() -> impl Fn(&MockRequest) -> MockReply + Send + Sync + 'static {
    let inventory = Taxonomies::stock().indicators;
    move |req: &MockRequest| {
        let user = req.user();
        let Some(i) = article_number(user) else {
            return MockReply::Status(400, "no article marker".into());
        };
        if user.contains("frames-list") {
            MockReply::Content(generic_reply(i))
        } else {
            MockReply::Content(indicator_reply(i, &inventory))
        }
    }
}

/// Writes articles in the raw ingest format.
pub fn write_corpus(path: &Path, articles: &[Article]) -> std::io::Result<()> {
    let records: Vec<Value> = articles
        .iter()
        .map(|a| {
            json!({
                "id": a.id,
                "url": a.url,
                "region": a.region.as_str(),
                "title": a.title,
                "body": a.body,
                "published_at": a.published_at.to_string(),
            })
        })
        .collect();
    crate::jsonl::write_records(path, None, &records).map(|_| ())
}

/// Gold labels: the scripted labels, except that every fourth article also carries "Morality".
pub fn write_gold(path: &Path) -> std::io::Result<()> {
    let records: Vec<Value> = (0..FIXTURE_SIZE)
        .map(|i| {
            let mut labels = generic_labels(i);
            if labels.is_empty() {
                labels.push("Political");
            }
            if i % 4 == 0 {
                labels.push("Morality");
            }
            json!({"article_id": format!("a{i:03}"), "labels": labels})
        })
        .collect();
    crate::jsonl::write_records(path, None, &records).map(|_| ())
}

/// Writes `config.toml` into `dir` with the given corpus and output directory.
pub fn write_config(dir: &Path, corpus: &Path, output: &Path, extra: &str) -> std::io::Result<PathBuf> {
    let p = dir.join("config.toml");
    let text = format!(
        "[paths]\ncorpus = {:?}\noutput_dir = {:?}\n{extra}\n",
        corpus.display().to_string(),
        output.display().to_string()
    );
    std::fs::write(&p, text)?;
    Ok(p)
}
