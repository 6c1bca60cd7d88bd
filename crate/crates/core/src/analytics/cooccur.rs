use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::EffectScope;
use crate::semframe::SemanticFrameOccurrence;
use crate::taxonomy::FrameInventory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CooccurrenceScope {
    #[default]
    Article,
    Sentence,
}

/// Symmetric frame-by-frame counts. `counts[i][j]` (i != j) is the number of units holding
/// both frames; the diagonal is the number of units holding the frame at all.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceMatrix {
    pub scope: CooccurrenceScope,
    pub frames: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl CooccurrenceMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<usize> {
        let i = self.frames.iter().position(|f| f == a)?;
        let j = self.frames.iter().position(|f| f == b)?;
        Some(self.counts[i][j])
    }
}

/// Rows and columns are the inventory frames admitted by `effect`, in inventory order.
pub fn cooccurrence<'a>(
    occurrences: impl IntoIterator<Item = &'a SemanticFrameOccurrence>,
    scope: CooccurrenceScope,
    effect: EffectScope,
    inventory: &FrameInventory,
) -> CooccurrenceMatrix {
    let frames: Vec<String> = inventory
        .frames
        .iter()
        .filter(|f| effect.admits(Some(f.effect_class)))
        .map(|f| f.frame_name.clone())
        .collect();
    let index: BTreeMap<&str, usize> = frames.iter().enumerate().map(|(i, f)| (f.as_str(), i)).collect();
    let mut units: BTreeMap<(&str, Option<usize>), BTreeSet<usize>> = BTreeMap::new();
    for o in occurrences {
        if let Some(&i) = index.get(o.frame_name.as_str()) {
            let key = match scope {
                CooccurrenceScope::Article => (o.article_id.as_str(), None),
                CooccurrenceScope::Sentence => (o.article_id.as_str(), Some(o.sentence_index)),
            };
            units.entry(key).or_default().insert(i);
        }
    }
    let mut counts = vec![vec![0; frames.len()]; frames.len()];
    for present in units.values() {
        for &a in present {
            for &b in present {
                counts[a][b] += 1;
            }
        }
    }
    CooccurrenceMatrix { scope, frames, counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semframe::{OccurrenceSource, TextSpan};
    use crate::taxonomy::Taxonomies;

    fn occ(article: &str, sentence: usize, frame: &str) -> SemanticFrameOccurrence {
        SemanticFrameOccurrence {
            article_id: article.into(),
            sentence_index: sentence,
            frame_name: frame.into(),
            trigger: TextSpan { text: "t".into(), start: 0, end: 1 },
            roles: Default::default(),
            source: OccurrenceSource::Lexicon,
        }
    }

    #[test]
    fn scopes() {
        let inv = Taxonomies::stock().frames;
        let o = [occ("a", 0, "Attack"), occ("a", 2, "Killing"), occ("a", 2, "Killing")];
        let m = cooccurrence(&o, CooccurrenceScope::Article, EffectScope::All, &inv);
        assert_eq!(m.get("Attack", "Killing"), Some(1));
        assert_eq!(m.get("Killing", "Killing"), Some(1));
        let m = cooccurrence(&o, CooccurrenceScope::Sentence, EffectScope::All, &inv);
        assert_eq!(m.get("Attack", "Killing"), Some(0));
        assert_eq!(m.get("Killing", "Attack"), Some(0));
        let m = cooccurrence(&o, CooccurrenceScope::Article, EffectScope::Invisible, &inv);
        assert_eq!(m.frames.len(), 10);
        assert_eq!(m.get("Attack", "Killing"), None);
        assert!(m.counts.iter().flatten().all(|c| *c == 0));
    }
}
