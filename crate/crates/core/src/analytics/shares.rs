use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Article;
use crate::llm_gateway::{GenericFrameAssignment, IndicatorInstance};
use crate::semframe::{Gazetteer, SemanticFrameOccurrence};
use crate::taxonomy::{EffectClass, FrameInventory, IndicatorInventory};

/// Each count divided by the total; empty when the total is zero.
fn normalize(counts: BTreeMap<String, usize>) -> BTreeMap<String, f64> {
    let total: usize = counts.values().sum();
    if total == 0 {
        return BTreeMap::new();
    }
    counts.into_iter().map(|(k, n)| (k, n as f64 / total as f64)).collect()
}

/// Label share over all label assignments (multi-label: the denominator counts every label
/// on every article). Invalid assignments are skipped.
pub fn generic_frame_share<'a>(
    assignments: impl IntoIterator<Item = &'a GenericFrameAssignment>,
) -> BTreeMap<String, f64> {
    let mut counts = BTreeMap::new();
    for a in assignments.into_iter().filter(|a| a.valid) {
        for f in &a.frames {
            *counts.entry(f.clone()).or_insert(0) += 1;
        }
    }
    normalize(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateVariant {
    /// Mean of per-article rates.
    #[default]
    Mean,
    /// Pooled instance count over pooled token count.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorRates {
    pub rates: BTreeMap<String, f64>,
    pub articles: usize,
    pub zero_token_articles: usize,
}

/// Grounded instances per token for every kind in the inventory. Articles without tokens
/// are excluded and counted.
pub fn indicator_rate<'a>(
    instances: impl IntoIterator<Item = &'a IndicatorInstance>,
    articles: impl IntoIterator<Item = &'a Article>,
    inventory: &IndicatorInventory,
    variant: RateVariant,
) -> IndicatorRates {
    let mut tokens: BTreeMap<&str, usize> = BTreeMap::new();
    let mut zero = 0;
    for a in articles {
        if a.token_count == 0 {
            zero += 1;
        } else {
            tokens.insert(a.id.as_str(), a.token_count);
        }
    }
    // (kind, article) -> grounded count
    let mut counts: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for i in instances.into_iter().filter(|i| i.grounded) {
        if tokens.contains_key(i.article_id.as_str()) {
            *counts.entry((i.kind_path.as_str(), i.article_id.as_str())).or_insert(0) += 1;
        }
    }
    let n = tokens.len();
    let pooled_tokens: usize = tokens.values().sum();
    let mut rates = BTreeMap::new();
    for kind in &inventory.kinds {
        let k = kind.path.as_str();
        let value = if n == 0 {
            0.0
        } else {
            match variant {
                RateVariant::Mean => {
                    let sum: f64 = tokens
                        .iter()
                        .map(|(id, t)| counts.get(&(k, id)).copied().unwrap_or(0) as f64 / *t as f64)
                        .sum();
                    sum / n as f64
                }
                RateVariant::Pooled => {
                    let c: usize = tokens.keys().map(|id| counts.get(&(k, id)).copied().unwrap_or(0)).sum();
                    c as f64 / pooled_tokens as f64
                }
            }
        };
        rates.insert(k.to_string(), value);
    }
    IndicatorRates { rates, articles: n, zero_token_articles: zero }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectScope {
    #[default]
    All,
    Visible,
    Invisible,
}

impl EffectScope {
    pub fn admits(self, class: Option<EffectClass>) -> bool {
        match self {
            EffectScope::All => class.is_some(),
            EffectScope::Visible => class == Some(EffectClass::Visible),
            EffectScope::Invisible => class == Some(EffectClass::Invisible),
        }
    }
}

/// Share of each frame among the occurrences inside `scope`.
pub fn frame_share<'a>(
    occurrences: impl IntoIterator<Item = &'a SemanticFrameOccurrence>,
    inventory: &FrameInventory,
    scope: EffectScope,
) -> BTreeMap<String, f64> {
    let mut counts = BTreeMap::new();
    for o in occurrences {
        if scope.admits(inventory.effect_class(&o.frame_name)) {
            *counts.entry(o.frame_name.clone()).or_insert(0) += 1;
        }
    }
    normalize(counts)
}

/// Actor-group shares of the fillers of `role`, optionally restricted to one frame.
pub fn role_distribution<'a>(
    occurrences: impl IntoIterator<Item = &'a SemanticFrameOccurrence>,
    gazetteer: &Gazetteer,
    frame: Option<&str>,
    role: &str,
) -> BTreeMap<String, f64> {
    let mut counts = BTreeMap::new();
    for o in occurrences {
        if frame.is_some_and(|f| f != o.frame_name) {
            continue;
        }
        if let Some(filler) = o.roles.get(role) {
            *counts.entry(gazetteer.group_of(&filler.text).to_string()).or_insert(0) += 1;
        }
    }
    normalize(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semframe::{OccurrenceSource, RoleFiller, TextSpan};
    use crate::taxonomy::Taxonomies;
    use crate::Region;
    use std::collections::BTreeSet;

    fn assignment(id: &str, frames: &[&str], valid: bool) -> GenericFrameAssignment {
        GenericFrameAssignment {
            article_id: id.into(),
            frames: frames.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>(),
            reason: String::new(),
            raw_response: String::new(),
            valid,
        }
    }

    fn article(id: &str, tokens: usize) -> Article {
        let body = vec!["w"; tokens].join(" ");
        Article::new(
            Some(id.into()),
            "https://www.cnn.com/x",
            Region::US,
            "t",
            &body,
            chrono::NaiveDate::from_ymd_opt(2023, 10, 10).unwrap(),
        )
        .unwrap()
    }

    fn instance(id: &str, kind: &str, grounded: bool) -> IndicatorInstance {
        IndicatorInstance {
            article_id: id.into(),
            kind_path: kind.into(),
            excerpt: "x".into(),
            target: None,
            reasoning: None,
            grounded,
            char_span: grounded.then_some((0, 1)),
        }
    }

    fn occ(frame: &str, roles: &[(&str, &str)]) -> SemanticFrameOccurrence {
        SemanticFrameOccurrence {
            article_id: "a".into(),
            sentence_index: 0,
            frame_name: frame.into(),
            trigger: TextSpan { text: "t".into(), start: 0, end: 1 },
            roles: roles
                .iter()
                .map(|(r, t)| (r.to_string(), RoleFiller { text: t.to_string(), start: 0, end: 0, raw_role: r.to_string() }))
                .collect(),
            source: OccurrenceSource::Lexicon,
        }
    }

    #[test]
    fn generic_shares() {
        let a = [assignment("1", &["Political"], true), assignment("2", &["Political", "Security and defense"], true)];
        let s = generic_frame_share(&a);
        assert_eq!(s["Political"], 2.0 / 3.0);
        assert_eq!(s["Security and defense"], 1.0 / 3.0);
        assert_eq!(generic_frame_share(&[assignment("1", &["None"], true)])["None"], 1.0);
        assert!(generic_frame_share(&[]).is_empty());
        assert!(generic_frame_share(&[assignment("1", &["None"], false)]).is_empty());
    }

    #[test]
    fn rates() {
        let inv = Taxonomies::stock().indicators;
        let k = "war.partisan_framing";
        let arts = [article("a", 200)];
        let inst: Vec<_> = (0..4).map(|_| instance("a", k, true)).chain([instance("a", k, false)]).collect();
        let r = indicator_rate(&inst, &arts, &inv, RateVariant::Mean);
        assert_eq!(r.rates[k], 0.02);
        assert_eq!(r.rates.len(), inv.kinds.len());
        assert_eq!(r.rates["peace.peace_orientation"], 0.0);

        let arts = [article("a", 200), article("b", 100), article("z", 0)];
        let r = indicator_rate(&inst, &arts, &inv, RateVariant::Mean);
        assert_eq!(r.rates[k], 0.01);
        assert_eq!(r.zero_token_articles, 1);
        let p = indicator_rate(&inst, &arts, &inv, RateVariant::Pooled);
        assert!((p.rates[k] - 4.0 / 300.0).abs() < 1e-15);
    }

    #[test]
    fn frame_shares_by_scope() {
        let inv = Taxonomies::stock().frames;
        let o: Vec<_> = ["Attack", "Attack", "Attack", "Killing"].iter().map(|f| occ(f, &[])).collect();
        let s = frame_share(&o, &inv, EffectScope::Visible);
        assert_eq!((s["Attack"], s["Killing"]), (0.75, 0.25));
        assert!(frame_share(&o, &inv, EffectScope::Invisible).is_empty());
        let mixed: Vec<_> = ["Attack", "Fear", "Kinship", "Kinship", "Nonexistent"].iter().map(|f| occ(f, &[])).collect();
        let s = frame_share(&mixed, &inv, EffectScope::All);
        assert!((s.values().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(!s.contains_key("Nonexistent"));
    }

    #[test]
    fn roles_by_group() {
        let g = Gazetteer::stock();
        let o = [
            occ("Attack", &[("Assailant", "Hamas")]),
            occ("Attack", &[("Assailant", "Hamas militants"), ("Victim", "kibbutz")]),
            occ("Killing", &[("Assailant", "IDF")]),
        ];
        let d = role_distribution(&o, &g, None, "Assailant");
        assert_eq!(d["hamas-associated"], 2.0 / 3.0);
        assert_eq!(d["israel-associated"], 1.0 / 3.0);
        assert_eq!(role_distribution(&o, &g, Some("Attack"), "Assailant").len(), 1);
        assert!(role_distribution(&o, &g, Some("Death"), "Assailant").is_empty());
        let d = role_distribution(&[occ("Attack", &[("Assailant", "unknown gunmen")])], &g, None, "Assailant");
        assert_eq!(d, BTreeMap::from([("other".to_string(), 1.0)]));
    }
}
