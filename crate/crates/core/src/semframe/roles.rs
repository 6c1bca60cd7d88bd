//! Actor gazetteer and the nearest-entity Assailant/Victim heuristic.
//!
//! Entities in a sentence are gazetteer names (longest, leftmost) plus runs of capitalized
//! tokens that are not function words, weekdays or months. Nothing overlapping the trigger
//! counts. The Assailant is the nearest entity before the trigger and the Victim the
//! nearest after it. When the trigger directly follows a passive auxiliary ("was attacked")
//! the two sides swap. Known failure modes: no syntax, so relative clauses, coordination,
//! lists of actors and lowercase common-noun victims without a gazetteer entry are missed
//! or misassigned.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{RoleFiller, SemanticFrameOccurrence};
use crate::taxonomy::{FrameOfInterest, TaxonomyError};
use crate::text::{char_slice, fold, folded_tokens, token_spans};

pub const GAZETTEER_FILE: &str = "gazetteer.toml";
pub const OTHER_GROUP: &str = "other";
pub const PASSIVE_CUES: &[&str] = &["was", "were", "been", "being"];

const STOCK_GAZETTEER: &str = include_str!("../../data/semframe/gazetteer.toml");

/// Capitalized words that never start or extend an entity.
const NON_ENTITY: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "he", "she", "it", "they", "we", "i", "you", "his", "her",
    "their", "its", "our", "in", "on", "at", "by", "for", "from", "with", "after", "before", "during", "as", "but",
    "and", "or", "if", "when", "while", "then", "there", "here", "some", "many", "most", "all", "no", "several",
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday", "january", "february", "march",
    "april", "may", "june", "july", "august", "september", "october", "november", "december",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorGroup {
    pub name: String,
    pub names: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GazetteerFile {
    #[serde(rename = "group")]
    groups: Vec<ActorGroup>,
}

#[derive(Debug, Clone)]
pub struct Gazetteer {
    pub groups: Vec<ActorGroup>,
    /// (folded tokens, group index), in file order.
    entries: Vec<(Vec<String>, usize)>,
}

impl Gazetteer {
    pub fn stock() -> Gazetteer {
        Gazetteer::from_toml(STOCK_GAZETTEER).expect("stock gazetteer parses")
    }

    pub fn load(path: &Path) -> Result<Gazetteer, TaxonomyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| TaxonomyError::Io { path: path.display().to_string(), source })?;
        Gazetteer::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Gazetteer, TaxonomyError> {
        let file: GazetteerFile = toml::from_str(text)
            .map_err(|e| TaxonomyError::Parse { file: GAZETTEER_FILE.into(), message: e.to_string() })?;
        Gazetteer::new(file.groups)
    }

    pub fn new(groups: Vec<ActorGroup>) -> Result<Gazetteer, TaxonomyError> {
        let mut problems = Vec::new();
        let mut seen = BTreeSet::new();
        let mut entries = Vec::new();
        for (gi, g) in groups.iter().enumerate() {
            for name in &g.names {
                let toks = folded_tokens(name);
                if toks.is_empty() {
                    problems.push(format!("group {:?}: empty name", g.name));
                } else if !seen.insert(toks.clone()) {
                    problems.push(format!("gazetteer name {name:?} is listed twice"));
                } else {
                    entries.push((toks, gi));
                }
            }
        }
        if !problems.is_empty() {
            return Err(TaxonomyError::Validation(problems));
        }
        Ok(Gazetteer { groups, entries })
    }

    /// Non-overlapping name matches in `tokens` as (first, past-last, group index),
    /// longest first then leftmost; sorted by position.
    pub fn matches(&self, tokens: &[String]) -> Vec<(usize, usize, usize)> {
        let mut found = Vec::new();
        for (toks, gi) in &self.entries {
            let k = toks.len();
            for i in 0..tokens.len().saturating_sub(k - 1) {
                if tokens[i..i + k] == toks[..] {
                    found.push((i, i + k, *gi));
                }
            }
        }
        found.sort_by(|a, b| (b.1 - b.0).cmp(&(a.1 - a.0)).then(a.0.cmp(&b.0)).then(a.2.cmp(&b.2)));
        let mut taken = vec![false; tokens.len()];
        let mut out = Vec::new();
        for (a, b, g) in found {
            if taken[a..b].iter().all(|t| !t) {
                taken[a..b].iter_mut().for_each(|t| *t = true);
                out.push((a, b, g));
            }
        }
        out.sort();
        out
    }

    /// Actor group of a role filler: the group of the longest name it contains, else `other`.
    pub fn group_of(&self, filler: &str) -> &str {
        let toks = folded_tokens(filler);
        self.matches(&toks)
            .into_iter()
            .max_by(|a, b| (a.1 - a.0).cmp(&(b.1 - b.0)).then(b.0.cmp(&a.0)))
            .map(|(_, _, g)| self.groups[g].name.as_str())
            .unwrap_or(OTHER_GROUP)
    }
}

/// Fills Assailant and Victim for frames that report both labels; other frames pass through.
pub fn extract_roles(
    mut occ: SemanticFrameOccurrence,
    sentence: &str,
    gazetteer: &Gazetteer,
    frame: &FrameOfInterest,
) -> SemanticFrameOccurrence {
    let (Some(assailant_raw), Some(victim_raw)) = (frame.raw_role_for("Assailant"), frame.raw_role_for("Victim")) else {
        return occ;
    };
    let toks = token_spans(sentence);
    let folded: Vec<String> = toks.iter().map(|t| fold(t.2)).collect();
    let chars: Vec<char> = sentence.chars().collect();
    let (ts, te) = (occ.trigger.start, occ.trigger.end);
    let overlaps_trigger = |a: usize, b: usize| a < te && ts < b;

    // Entities as char spans.
    let mut covered = vec![false; toks.len()];
    let mut entities: Vec<(usize, usize)> = Vec::new();
    for (a, b, _) in gazetteer.matches(&folded) {
        let (s, e) = (toks[a].0, toks[b - 1].1);
        if !overlaps_trigger(s, e) {
            covered[a..b].iter_mut().for_each(|c| *c = true);
            entities.push((s, e));
        }
    }
    let is_cap = |i: usize| {
        !covered[i]
            && !overlaps_trigger(toks[i].0, toks[i].1)
            && toks[i].2.chars().next().is_some_and(char::is_uppercase)
            && !NON_ENTITY.contains(&folded[i].as_str())
    };
    let mut i = 0;
    while i < toks.len() {
        if !is_cap(i) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < toks.len() && is_cap(j) && chars[toks[j - 1].1..toks[j].0].iter().all(|c| c.is_whitespace()) {
            j += 1;
        }
        entities.push((toks[i].0, toks[j - 1].1));
        i = j;
    }

    let before = entities.iter().filter(|e| e.1 <= ts).max_by_key(|e| e.1).copied();
    let after = entities.iter().filter(|e| e.0 >= te).min_by_key(|e| e.0).copied();
    let passive = toks.iter().position(|t| t.0 == ts).is_some_and(|k| {
        k > 0
            && PASSIVE_CUES.contains(&folded[k - 1].as_str())
            && chars[toks[k - 1].1..ts].iter().all(|c| c.is_whitespace())
    });
    let (assailant, victim) = if passive { (after, before) } else { (before, after) };

    let filler = |(s, e): (usize, usize), raw: &str| RoleFiller {
        text: char_slice(sentence, s, e).to_string(),
        start: s,
        end: e,
        raw_role: raw.to_string(),
    };
    if let Some(span) = assailant {
        occ.roles.insert("Assailant".into(), filler(span, assailant_raw));
    }
    if let Some(span) = victim {
        occ.roles.insert("Victim".into(), filler(span, victim_raw));
    }
    occ
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semframe::{tag_sentence, Lexicon};
    use crate::taxonomy::Taxonomies;

    fn roles(sentence: &str) -> (Option<String>, Option<String>) {
        let tax = Taxonomies::stock();
        let occ = tag_sentence("a", 0, sentence, &Lexicon::stock())
            .into_iter()
            .find(|o| o.frame_name == "Attack" || o.frame_name == "Killing")
            .expect("an attack-like trigger");
        let frame = tax.frames.get(&occ.frame_name).unwrap();
        let occ = extract_roles(occ, sentence, &Gazetteer::stock(), frame);
        for f in occ.roles.values() {
            assert_eq!(char_slice(sentence, f.start, f.end), f.text);
            assert!(f.end <= occ.trigger.start || f.start >= occ.trigger.end);
        }
        (occ.roles.get("Assailant").map(|f| f.text.clone()), occ.roles.get("Victim").map(|f| f.text.clone()))
    }

    fn some(s: &str) -> Option<String> {
        Some(s.to_string())
    }

    #[test]
    fn active_voice() {
        assert_eq!(roles("Hamas attacked the kibbutz"), (some("Hamas"), some("kibbutz")));
        assert_eq!(roles("Israeli forces struck Jabalia camp on Tuesday."), (some("Israeli forces"), some("Jabalia camp")));
    }

    #[test]
    fn passive_voice_swaps() {
        assert_eq!(roles("The camp was attacked"), (None, some("camp")));
        assert_eq!(roles("The camp was attacked by Israeli forces"), (some("Israeli forces"), some("camp")));
    }

    #[test]
    fn trigger_at_start() {
        assert_eq!(roles("Attacks continued across Gaza City."), (None, some("Gaza City")));
    }

    #[test]
    fn killing_reports_killer_as_assailant() {
        let tax = Taxonomies::stock();
        let s = "Hamas gunmen killed Israeli civilians";
        let occ = tag_sentence("a", 0, s, &Lexicon::stock()).remove(0);
        let occ = extract_roles(occ, s, &Gazetteer::stock(), tax.frames.get("Killing").unwrap());
        assert_eq!(occ.roles["Assailant"].text, "Hamas gunmen");
        assert_eq!(occ.roles["Assailant"].raw_role, "Killer");
        assert_eq!(occ.roles["Victim"].raw_role, "Victim");
    }

    #[test]
    fn frames_without_roles_pass_through() {
        let tax = Taxonomies::stock();
        let s = "Hamas destroyed the tower";
        let occ = tag_sentence("a", 0, s, &Lexicon::stock()).remove(0);
        let out = extract_roles(occ.clone(), s, &Gazetteer::stock(), tax.frames.get("Destroying").unwrap());
        assert_eq!(out, occ);
    }

    #[test]
    fn group_lookup() {
        let g = Gazetteer::stock();
        assert_eq!(g.group_of("Hamas"), "hamas-associated");
        assert_eq!(g.group_of("Hamas militants"), "hamas-associated");
        assert_eq!(g.group_of("IDF"), "israel-associated");
        assert_eq!(g.group_of("unknown gunmen"), OTHER_GROUP);
        assert_eq!(g.group_of("the Jabalia refugee camp"), "palestinian-civilian");
        assert!(Gazetteer::new(vec![
            ActorGroup { name: "a".into(), names: vec!["x".into()] },
            ActorGroup { name: "b".into(), names: vec!["X".into()] },
        ])
        .is_err());
    }
}
