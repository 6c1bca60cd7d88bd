//! Validation of recovered model output against the taxonomy.
//!
//! Parsing is total: every input yields a result, and every anomaly is
//! reported in the returned audit fields instead of as an error.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::ground::ground_excerpt;
use super::recover::recover_object;
use crate::corpus::Article;
use crate::taxonomy::{normalize_name, GenericInventory, IndicatorInventory, IndicatorKind, Polarity, NONE_LABEL};

pub const FRAMES_KEY: &str = "frames-list";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericFrameAssignment {
    pub article_id: String,
    pub frames: BTreeSet<String>,
    pub reason: String,
    pub raw_response: String,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenericParse {
    pub assignment: GenericFrameAssignment,
    /// Labels the model produced that are not in the inventory.
    pub unknown_labels: Vec<String>,
    /// Set when no usable JSON could be recovered.
    pub failure: Option<String>,
}

pub fn parse_generic_response(raw: &str, article_id: &str, inventory: &GenericInventory) -> GenericParse {
    let mut out = GenericParse {
        assignment: GenericFrameAssignment {
            article_id: article_id.to_string(),
            frames: BTreeSet::from([NONE_LABEL.to_string()]),
            reason: String::new(),
            raw_response: raw.to_string(),
            valid: false,
        },
        unknown_labels: Vec::new(),
        failure: None,
    };
    let Some(obj) = recover_object(raw) else {
        out.failure = Some("no JSON object could be recovered".into());
        return out;
    };
    if let Some(reason) = lookup(&obj, &["reason", "reasoning"]).and_then(Value::as_str) {
        out.assignment.reason = reason.to_string();
    }
    let Some(list) = lookup(&obj, &[FRAMES_KEY, "frames_list", "frames"]) else {
        out.failure = Some(format!("missing \"{FRAMES_KEY}\""));
        return out;
    };

    let mut frames = BTreeSet::new();
    for name in label_candidates(list, inventory) {
        match inventory.resolve(&name) {
            Some(label) => {
                frames.insert(label.to_string());
            }
            None => out.unknown_labels.push(name),
        }
    }
    if frames.len() > 1 {
        frames.remove(NONE_LABEL);
    }
    if !frames.is_empty() {
        out.assignment.frames = frames;
        out.assignment.valid = true;
    }
    out
}

fn lookup<'a>(obj: &'a Value, keys: &[&str]) -> Option<&'a Value> {
    let map = obj.as_object()?;
    keys.iter().find_map(|k| {
        map.get(*k).or_else(|| map.iter().find(|(mk, _)| normalize_name(mk) == normalize_name(k)).map(|(_, v)| v))
    })
}

/// Label strings from a `frames-list` value. A JSON list is used as is; a string is
/// parsed as a JSON list when possible, otherwise scanned for inventory labels.
fn label_candidates(v: &Value, inventory: &GenericInventory) -> Vec<String> {
    match v {
        Value::Array(items) => items
            .iter()
            .filter_map(|i| match i {
                Value::String(s) => Some(s.clone()),
                Value::Null => None,
                other => Some(other.to_string()),
            })
            .collect(),
        Value::String(s) => {
            if let Ok(Value::Array(items)) = serde_json::from_str::<Value>(s.trim()) {
                return label_candidates(&Value::Array(items), inventory);
            }
            scan_labels(s, inventory)
        }
        Value::Null => Vec::new(),
        other => vec![other.to_string()],
    }
}

/// Finds inventory labels and aliases inside free text, longest names first, without overlap.
fn scan_labels(s: &str, inventory: &GenericInventory) -> Vec<String> {
    let hay = normalize_name(s.trim_matches(|c: char| c == '[' || c == ']' || c.is_whitespace()));
    if hay.is_empty() {
        return Vec::new();
    }
    if inventory.resolve(&hay).is_some() {
        return vec![hay];
    }
    let mut names: Vec<String> = inventory
        .frames
        .iter()
        .flat_map(|f| std::iter::once(&f.label).chain(f.aliases.iter()))
        .map(|n| normalize_name(n))
        .collect();
    names.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    let mut taken = vec![false; hay.len()];
    let mut found: Vec<(usize, String)> = Vec::new();
    for name in names {
        let mut from = 0;
        while let Some(rel) = hay[from..].find(&name) {
            let start = from + rel;
            let end = start + name.len();
            let boundary = |i: usize| hay[..i].chars().last().map_or(true, |c| !c.is_alphanumeric());
            let boundary_end = hay[end..].chars().next().map_or(true, |c| !c.is_alphanumeric());
            if boundary(start) && boundary_end && !taken[start..end].iter().any(|t| *t) {
                taken[start..end].iter_mut().for_each(|t| *t = true);
                found.push((start, name.clone()));
            }
            from = start + name.len().max(1);
        }
    }
    if found.is_empty() {
        return vec![s.trim().to_string()];
    }
    found.sort();
    found.into_iter().map(|(_, n)| n).collect()
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorInstance {
    pub article_id: String,
    pub kind_path: String,
    pub excerpt: String,
    pub target: Option<String>,
    pub reasoning: Option<String>,
    pub grounded: bool,
    pub char_span: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorParse {
    pub instances: Vec<IndicatorInstance>,
    /// Malformed entries skipped, per kind path.
    pub skipped_by_kind: BTreeMap<String, usize>,
    /// Keys in the response that match no kind, as dotted paths.
    pub unknown_keys: Vec<String>,
    pub failure: Option<String>,
}

impl IndicatorParse {
    pub fn skipped_total(&self) -> usize {
        self.skipped_by_kind.values().sum()
    }
}

pub fn parse_indicator_response(raw: &str, article: &Article, inventory: &IndicatorInventory) -> IndicatorParse {
    let mut out = IndicatorParse::default();
    let Some(root) = recover_object(raw) else {
        out.failure = Some("no JSON object could be recovered".into());
        return out;
    };
    let root = root.as_object().expect("recovered value is an object");
    let mut known_tops = BTreeSet::new();

    for polarity in [Polarity::War, Polarity::Peace] {
        let top_key = inventory.top_key(polarity);
        let Some((actual_top, branch)) = find_key(root, top_key) else { continue };
        known_tops.insert(actual_top.clone());
        let prefix = polarity.as_str();
        let kinds: Vec<&IndicatorKind> = inventory.of_polarity(polarity).collect();
        let Some(branch) = branch.as_object() else {
            for k in &kinds {
                *out.skipped_by_kind.entry(k.path.clone()).or_default() += 1;
            }
            continue;
        };
        collect_unknown(branch, prefix, &kinds, 0, &mut out.unknown_keys);
        for kind in kinds {
            let keys = kind.keys();
            let Some(value) = walk(branch, &keys) else { continue };
            match entries(value, kind) {
                Ok(found) => {
                    for e in found {
                        match e {
                            Some((excerpt, target, reasoning)) => {
                                let g = ground_excerpt(&excerpt, &article.body);
                                out.instances.push(IndicatorInstance {
                                    article_id: article.id.clone(),
                                    kind_path: kind.path.clone(),
                                    excerpt,
                                    target: target.filter(|_| kind.has_target),
                                    reasoning: reasoning.filter(|_| kind.has_reasoning),
                                    grounded: g.grounded,
                                    char_span: g.span,
                                });
                            }
                            None => *out.skipped_by_kind.entry(kind.path.clone()).or_default() += 1,
                        }
                    }
                }
                Err(()) => *out.skipped_by_kind.entry(kind.path.clone()).or_default() += 1,
            }
        }
    }
    for key in root.keys() {
        if !known_tops.contains(key) {
            out.unknown_keys.push(key.clone());
        }
    }
    out
}

fn key_norm(s: &str) -> String {
    let n = normalize_name(s).replace(' ', "_");
    n.strip_suffix('s').map(str::to_string).unwrap_or(n)
}

/// Exact key, else a key equal after normalization and ignoring a trailing plural `s`.
fn find_key<'a>(map: &'a Map<String, Value>, key: &str) -> Option<(&'a String, &'a Value)> {
    if let Some((k, v)) = map.get_key_value(key) {
        return Some((k, v));
    }
    let target = key_norm(key);
    map.iter().find(|(k, _)| key_norm(k) == target)
}

fn walk<'a>(branch: &'a Map<String, Value>, keys: &[&str]) -> Option<&'a Value> {
    let (head, rest) = keys.split_first()?;
    let (_, v) = find_key(branch, head)?;
    if rest.is_empty() {
        Some(v)
    } else {
        walk(v.as_object()?, rest)
    }
}

/// Records response keys that lead to no kind. `depth` keys of every kind in `kinds` have
/// already matched.
fn collect_unknown(obj: &Map<String, Value>, path: &str, kinds: &[&IndicatorKind], depth: usize, out: &mut Vec<String>) {
    for (key, value) in obj {
        let here = format!("{path}.{key}");
        let hits: Vec<&IndicatorKind> = kinds
            .iter()
            .copied()
            .filter(|k| k.keys().get(depth).is_some_and(|seg| key_norm(seg) == key_norm(key)))
            .collect();
        if hits.is_empty() {
            out.push(here);
        } else if hits.iter().all(|k| k.keys().len() > depth + 1) {
            if let Some(inner) = value.as_object() {
                collect_unknown(inner, &here, &hits, depth + 1, out);
            }
        }
    }
}

type Entry = (String, Option<String>, Option<String>);

/// Instance tuples from a kind's value. `Err` means the whole value is malformed;
/// `Ok(None)` items are individual malformed entries.
fn entries(value: &Value, kind: &IndicatorKind) -> Result<Vec<Option<Entry>>, ()> {
    let items = match value {
        Value::Null => return Ok(Vec::new()),
        Value::String(_) => std::slice::from_ref(value),
        Value::Array(items) => items.as_slice(),
        _ => return Err(()),
    };
    let mut out = Vec::new();
    for item in items {
        match entry(item, kind) {
            Some(list) => out.extend(list.into_iter().map(Some)),
            None => out.push(None),
        }
    }
    Ok(out)
}

fn single(v: Vec<Entry>) -> Option<Vec<Entry>> {
    (!v.is_empty()).then_some(v)
}

fn text(v: Option<&Value>) -> Option<String> {
    match v? {
        Value::String(s) if !s.trim().is_empty() => Some(s.trim().to_string()),
        Value::Array(a) => {
            let parts: Vec<String> = a.iter().filter_map(|x| text(Some(x))).collect();
            (!parts.is_empty()).then(|| parts.join(", "))
        }
        _ => None,
    }
}

/// One entry of a kind's list. Returns the instances it expands to, or `None` if malformed.
fn entry(item: &Value, kind: &IndicatorKind) -> Option<Vec<Entry>> {
    match item {
        Value::String(s) => {
            let s = s.trim();
            (!s.is_empty()).then(|| vec![(s.to_string(), None, None)])
        }
        Value::Array(parts) => {
            if parts.is_empty() || parts.len() > 3 && kind.has_target {
                return None;
            }
            if !kind.has_target && !kind.has_reasoning {
                // Instance-only: every string (possibly nested one level) is an excerpt.
                let mut out = Vec::new();
                for p in parts {
                    match p {
                        Value::String(s) if !s.trim().is_empty() => out.push((s.trim().to_string(), None, None)),
                        Value::Array(inner) => {
                            for s in inner.iter().filter_map(Value::as_str).filter(|s| !s.trim().is_empty()) {
                                out.push((s.trim().to_string(), None, None));
                            }
                        }
                        _ => {}
                    }
                }
                return single(out);
            }
            let target = text(parts.get(1));
            let reasoning = text(parts.get(2));
            let excerpts: Vec<String> = match &parts[0] {
                Value::String(s) if !s.trim().is_empty() => vec![s.trim().to_string()],
                Value::Array(list) => list
                    .iter()
                    .filter_map(Value::as_str)
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect(),
                _ => Vec::new(),
            };
            single(excerpts.into_iter().map(|e| (e, target.clone(), reasoning.clone())).collect())
        }
        Value::Object(map) => {
            let get = |keys: &[&str]| keys.iter().find_map(|k| map.get(*k));
            let excerpt = text(get(&["instance", "instances", "excerpt", "text", "quote"]))?;
            Some(vec![(excerpt, text(get(&["target", "targets"])), text(get(&["reasoning", "reason"])))])
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Region;
    use crate::taxonomy::Taxonomies;
    use chrono::NaiveDate;

    fn article(body: &str) -> Article {
        Article::new(
            Some("a1".into()),
            "https://www.bbc.co.uk/x",
            Region::UK,
            "Title",
            body,
            NaiveDate::from_ymd_opt(2023, 10, 9).unwrap(),
        )
        .unwrap()
    }

    fn labels(p: &GenericParse) -> Vec<&str> {
        p.assignment.frames.iter().map(String::as_str).collect()
    }

    #[test]
    fn direct_generic_parse() {
        let t = Taxonomies::stock();
        let p = parse_generic_response(
            r#"{"frames-list": ["Security and defense","Political"], "reason": "military and politics"}"#,
            "a1",
            &t.generic,
        );
        assert_eq!(labels(&p), ["Political", "Security and defense"]);
        assert!(p.assignment.valid);
        assert_eq!(p.assignment.reason, "military and politics");
        assert!(p.unknown_labels.is_empty());
    }

    #[test]
    fn fenced_and_case_folded() {
        let t = Taxonomies::stock();
        let p = parse_generic_response("```json\n{\"frames-list\": [\"security and defense\"]}\n```", "a1", &t.generic);
        assert_eq!(labels(&p), ["Security and defense"]);
        assert!(p.assignment.valid);
    }

    #[test]
    fn unknown_label_rejected() {
        let t = Taxonomies::stock();
        let p = parse_generic_response(r#"{"frames-list": ["Weather"]}"#, "a1", &t.generic);
        assert_eq!(labels(&p), [NONE_LABEL]);
        assert!(!p.assignment.valid);
        assert_eq!(p.unknown_labels, ["Weather"]);
        assert!(p.failure.is_none());
    }

    #[test]
    fn unparseable_generic_keeps_raw() {
        let t = Taxonomies::stock();
        let p = parse_generic_response("I think it is political.", "a1", &t.generic);
        assert!(!p.assignment.valid);
        assert_eq!(labels(&p), [NONE_LABEL]);
        assert_eq!(p.assignment.raw_response, "I think it is political.");
        assert!(p.failure.is_some());
    }

    #[test]
    fn string_shaped_frame_list() {
        let t = Taxonomies::stock();
        // The prompt's own example output quotes the list as a string.
        let p = parse_generic_response(
            r#"{"frames-list": "[Legality, constitutionality and jurisprudence, Crime and punishment]", "reason": "r"}"#,
            "a1",
            &t.generic,
        );
        assert_eq!(labels(&p), ["Crime and punishment", "Legality, constitutionality and jurisprudence"]);
        let p = parse_generic_response(r#"{"frames-list": "None", "reason": "r"}"#, "a1", &t.generic);
        assert_eq!(labels(&p), [NONE_LABEL]);
        assert!(p.assignment.valid);
    }

    #[test]
    fn none_yields_to_real_labels() {
        let t = Taxonomies::stock();
        let p = parse_generic_response(r#"{"frames-list": ["None", "Political", "Economy"]}"#, "a1", &t.generic);
        assert_eq!(labels(&p), ["Political"]);
        assert_eq!(p.unknown_labels, ["Economy"]);
    }

    const BODY: &str = "A minister called them animals on Tuesday. Families in Gaza grieve.";

    #[test]
    fn demonizing_entry_is_grounded() {
        let t = Taxonomies::stock();
        let raw = r#"{"war_journalism_indicators": {"language": {"demonizing_language": [["called them animals", "Hamas", "dehumanizing metaphor"]]}}}"#;
        let p = parse_indicator_response(raw, &article(BODY), &t.indicators);
        assert_eq!(p.instances.len(), 1);
        let i = &p.instances[0];
        assert_eq!(i.kind_path, "war.language.demonizing_language");
        assert_eq!(i.target.as_deref(), Some("Hamas"));
        assert_eq!(i.reasoning.as_deref(), Some("dehumanizing metaphor"));
        assert!(i.grounded);
        assert_eq!(i.char_span, Some((11, 30)));
        assert!(p.failure.is_none());
    }

    #[test]
    fn ungrounded_instance_is_kept() {
        let t = Taxonomies::stock();
        let raw = r#"{"peace_journalism_indicator": {"peace_frame": {"inclusion_of_peace_proposals": [["the peace talks collapsed", "both sides", "r"]]}}}"#;
        let p = parse_indicator_response(raw, &article(BODY), &t.indicators);
        assert_eq!(p.instances.len(), 1);
        assert!(!p.instances[0].grounded);
        assert_eq!(p.instances[0].char_span, None);
    }

    #[test]
    fn missing_peace_branch_is_fine() {
        let t = Taxonomies::stock();
        let raw = r#"{"war_journalism_indicators": {"focus_on_elites": ["A minister"], "partisan_framing": [["called them animals", "Hamas", "r"]]}}"#;
        let p = parse_indicator_response(raw, &article(BODY), &t.indicators);
        assert_eq!(p.instances.len(), 2);
        assert!(p.instances.iter().all(|i| i.kind_path.starts_with("war.")));
        assert_eq!(p.skipped_total(), 0);
        assert!(p.failure.is_none());
        let elite = p.instances.iter().find(|i| i.kind_path == "war.focus_on_elites").unwrap();
        assert_eq!((elite.target.as_ref(), elite.reasoning.as_ref()), (None, None));
    }

    #[test]
    fn tuple_lengths_vary() {
        let t = Taxonomies::stock();
        let raw = r#"{"war_journalism_indicators": {"partisan_framing": [["called them animals"], ["Families in Gaza", "Gazans"], "on Tuesday"],
            "military_solution": [["A minister", "extra", "ignored"]]},
            "peace_journalism_indicator": {"focus_on_invisible_effects_of_war": [["Families in Gaza grieve", "families", "dropped reasoning"]]}}"#;
        let p = parse_indicator_response(raw, &article(BODY), &t.indicators);
        let partisan: Vec<_> = p.instances.iter().filter(|i| i.kind_path == "war.partisan_framing").collect();
        assert_eq!(partisan.len(), 3);
        assert_eq!(partisan[0].target, None);
        assert_eq!(partisan[1].target.as_deref(), Some("Gazans"));
        assert_eq!(partisan[1].reasoning, None);
        let mil: Vec<_> = p.instances.iter().filter(|i| i.kind_path == "war.military_solution").collect();
        assert_eq!(mil.len(), 3, "instance-only kinds treat every string as an excerpt");
        let inv = p.instances.iter().find(|i| i.kind_path == "peace.focus_on_invisible_effects_of_war").unwrap();
        assert_eq!(inv.target.as_deref(), Some("families"));
        assert_eq!(inv.reasoning, None);
    }

    #[test]
    fn list_of_excerpts_in_first_position() {
        let t = Taxonomies::stock();
        let raw = r#"{"war_journalism_indicators": {"labelling_of_people": [[["called them animals", "Families"], "Gazans", "r"]]}}"#;
        let p = parse_indicator_response(raw, &article(BODY), &t.indicators);
        assert_eq!(p.instances.len(), 2);
        assert!(p.instances.iter().all(|i| i.target.as_deref() == Some("Gazans")));
    }

    #[test]
    fn malformed_branches_are_counted() {
        let t = Taxonomies::stock();
        let raw = r#"{"war_journalism_indicators": {"partisan_framing": 42, "attribution_of_blame": [["x", "y", "z"], 7, []],
            "language": {"dehumanizing_language": {"oops": true}}, "made_up": []}}"#;
        let p = parse_indicator_response(raw, &article(BODY), &t.indicators);
        assert_eq!(p.skipped_by_kind["war.partisan_framing"], 1);
        assert_eq!(p.skipped_by_kind["war.attribution_of_blame"], 2);
        assert_eq!(p.skipped_by_kind["war.language.dehumanizing_language"], 1);
        assert_eq!(p.instances.len(), 1);
        assert_eq!(p.unknown_keys, ["war.made_up"]);
    }

    #[test]
    fn tuple_parentheses_and_trailing_commas() {
        let t = Taxonomies::stock();
        let raw = "```json\n{\"war_journalism_indicators\": {\"partisan_framing\": [(\"called them animals\", \"Hamas\", \"r\"),],},}\n```";
        let p = parse_indicator_response(raw, &article(BODY), &t.indicators);
        assert_eq!(p.instances.len(), 1);
        assert!(p.instances[0].grounded);
    }

    #[test]
    fn unparseable_indicator_response() {
        let t = Taxonomies::stock();
        let p = parse_indicator_response("Sorry, I can't help with that.", &article(BODY), &t.indicators);
        assert!(p.instances.is_empty());
        assert!(p.failure.is_some());
    }
}
