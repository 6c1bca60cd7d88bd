//! Frame tagging for the frames of interest.
//!
//! The default backend is a lexicon tagger: sentences are split by rule, tokens are
//! lemmatized by suffix stripping, and lexical units are matched longest-first. Attack-like
//! frames then get heuristic Assailant/Victim fillers. Occurrences from an external neural
//! parser can be loaded instead through [`ingest_external`].

mod external;
mod lexicon;
mod roles;
mod sentence;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Article;
use crate::taxonomy::FrameInventory;
use crate::text::{char_slice, token_spans};

pub use external::{ingest_external, parse_external_line, ExternalIngest};
pub use lexicon::{lemma_candidates, LexicalUnit, Lexicon, LEXICON_FILE};
pub use roles::{extract_roles, ActorGroup, Gazetteer, GAZETTEER_FILE, OTHER_GROUP, PASSIVE_CUES};
pub use sentence::{split_sentences, split_sentences_with, Sentence, ABBREVIATIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OccurrenceSource {
    Lexicon,
    External,
}

impl OccurrenceSource {
    pub fn as_str(self) -> &'static str {
        match self {
            OccurrenceSource::Lexicon => "lexicon",
            OccurrenceSource::External => "external",
        }
    }
}

/// Which article text the tagger reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextScope {
    #[default]
    Body,
    Headline,
}

/// Text with a char span `[start, end)` relative to its sentence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TextSpan {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RoleFiller {
    pub text: String,
    pub start: usize,
    pub end: usize,
    /// Frame element as named by the frame (e.g. `Killer` reported under `Assailant`).
    pub raw_role: String,
}

/// One evoked frame. `roles` is keyed by reporting label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SemanticFrameOccurrence {
    pub article_id: String,
    pub sentence_index: usize,
    pub frame_name: String,
    pub trigger: TextSpan,
    #[serde(default)]
    pub roles: BTreeMap<String, RoleFiller>,
    pub source: OccurrenceSource,
}

/// Tags one sentence. Matches are taken longest first, then leftmost, then by frame order
/// in the lexicon; a match is dropped if it overlaps one already taken.
pub fn tag_sentence(
    article_id: &str,
    sentence_index: usize,
    sentence: &str,
    lexicon: &Lexicon,
) -> Vec<SemanticFrameOccurrence> {
    let toks = token_spans(sentence);
    let cands: Vec<Vec<String>> = toks.iter().map(|t| lemma_candidates(t.2)).collect();
    let chars: Vec<char> = sentence.chars().collect();
    let joined = |j: usize| chars[toks[j - 1].1..toks[j].0].iter().all(|c| c.is_whitespace() || *c == '-');

    // (token length, first token, frame index)
    let mut found: Vec<(usize, usize, usize)> = Vec::new();
    for i in 0..toks.len() {
        let mut seen = HashSet::new();
        for c in &cands[i] {
            for &(fi, ui) in lexicon.units_starting_with(c) {
                let lemma = &lexicon.unit(fi, ui).lemma;
                let k = lemma.len();
                let fits = i + k <= toks.len()
                    && (1..k).all(|j| joined(i + j) && cands[i + j].contains(&lemma[j]));
                if fits && seen.insert((k, fi)) {
                    found.push((k, i, fi));
                }
            }
        }
    }
    found.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut taken = vec![false; toks.len()];
    let mut accepted = Vec::new();
    for (k, i, fi) in found {
        if taken[i..i + k].iter().any(|t| *t) {
            continue;
        }
        taken[i..i + k].iter_mut().for_each(|t| *t = true);
        accepted.push((i, k, fi));
    }
    accepted.sort();
    accepted
        .into_iter()
        .map(|(i, k, fi)| {
            let (start, end) = (toks[i].0, toks[i + k - 1].1);
            SemanticFrameOccurrence {
                article_id: article_id.to_string(),
                sentence_index,
                frame_name: lexicon.frame_name(fi).to_string(),
                trigger: TextSpan { text: char_slice(sentence, start, end).to_string(), start, end },
                roles: BTreeMap::new(),
                source: OccurrenceSource::Lexicon,
            }
        })
        .collect()
}

/// Splits the chosen text, tags every sentence and fills roles where the frame has them.
pub fn tag_article(
    article: &Article,
    scope: TextScope,
    lexicon: &Lexicon,
    gazetteer: &Gazetteer,
    frames: &FrameInventory,
) -> Vec<SemanticFrameOccurrence> {
    let text = match scope {
        TextScope::Body => &article.body,
        TextScope::Headline => &article.title,
    };
    let mut out = Vec::new();
    for s in split_sentences(text) {
        for occ in tag_sentence(&article.id, s.index, &s.text, lexicon) {
            let occ = match frames.get(&occ.frame_name) {
                Some(frame) => extract_roles(occ, &s.text, gazetteer, frame),
                None => occ,
            };
            out.push(occ);
        }
    }
    out
}
