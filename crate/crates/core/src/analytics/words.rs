use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::parse_word_list;
use crate::text::folded_tokens;

const STOCK_STOPWORDS: &str = include_str!("../../data/analytics/stopwords.txt");

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Stopwords(BTreeSet<String>);

impl Stopwords {
    pub fn stock() -> Stopwords {
        Stopwords::from_text(STOCK_STOPWORDS)
    }

    pub fn from_text(text: &str) -> Stopwords {
        Stopwords(parse_word_list(text).into_iter().collect())
    }

    pub fn load(path: &Path) -> std::io::Result<Stopwords> {
        Ok(Stopwords::from_text(&std::fs::read_to_string(path)?))
    }

    pub fn new<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> Stopwords {
        Stopwords(words.into_iter().map(|w| w.as_ref().to_lowercase()).collect())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    /// Words in sorted order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

/// Top `k` unigrams over the texts, by count then alphabetically. Words are case-folded,
/// not lemmatized; stopwords and tokens without a letter or digit are dropped.
pub fn top_words<'a>(texts: impl IntoIterator<Item = &'a str>, k: usize, stopwords: &Stopwords) -> Vec<(String, usize)> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in texts {
        for w in folded_tokens(t) {
            if w.chars().any(char::is_alphanumeric) && !stopwords.contains(&w) {
                *counts.entry(w).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

/// Side-by-side `(word, count)` columns, one header per column, cells right-aligned.
pub fn render_word_table(columns: &[(String, Vec<(String, usize)>)]) -> String {
    let cells: Vec<Vec<String>> =
        columns.iter().map(|(_, rows)| rows.iter().map(|(w, n)| format!("({w}, {n})")).collect()).collect();
    let widths: Vec<usize> = columns
        .iter()
        .zip(&cells)
        .map(|((h, _), c)| c.iter().map(|s| s.chars().count()).chain([h.chars().count()]).max().unwrap_or(0))
        .collect();
    let line = |items: Vec<&str>| -> String {
        items
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:>w$}", w = *w))
            .collect::<Vec<_>>()
            .join(" | ")
            .trim_end()
            .to_string()
    };
    let mut out = String::new();
    out.push_str(&line(columns.iter().map(|(h, _)| h.as_str()).collect()));
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
    out.push('\n');
    let rows = cells.iter().map(Vec::len).max().unwrap_or(0);
    for r in 0..rows {
        out.push_str(&line(cells.iter().map(|c| c.get(r).map(String::as_str).unwrap_or("")).collect()));
        out.push('\n');
    }
    out
}
