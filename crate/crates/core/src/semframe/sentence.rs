//! Rule-based sentence splitting.
//!
//! A sentence ends at `.`, `?` or `!` (plus any closing quotes or brackets) followed by
//! whitespace or the end of text, unless the word carrying the period is a known
//! abbreviation. A blank line also ends a sentence. Offsets are chars into the input.

use serde::{Deserialize, Serialize};

pub const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "gen.", "col.", "lt.", "sgt.", "capt.", "maj.", "rep.",
    "sen.", "gov.", "pres.", "jr.", "sr.", "rev.", "u.s.", "u.k.", "u.n.", "e.g.", "i.e.", "vs.", "etc.",
    "no.", "jan.", "feb.", "mar.", "apr.", "aug.", "sep.", "sept.", "oct.", "nov.", "dec.", "approx.",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

pub fn split_sentences(body: &str) -> Vec<Sentence> {
    split_sentences_with(body, ABBREVIATIONS)
}

pub fn split_sentences_with(body: &str, abbreviations: &[&str]) -> Vec<Sentence> {
    let chars: Vec<char> = body.chars().collect();
    let mut bounds = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_whitespace() && chars[j] != '\n' {
                j += 1;
            }
            if j < chars.len() && chars[j] == '\n' {
                bounds.push((start, i));
                start = j;
                i = j;
                continue;
            }
        }
        if matches!(c, '.' | '?' | '!') {
            let mut end = i + 1;
            while end < chars.len() && matches!(chars[end], '.' | '?' | '!' | '"' | '\'' | '\u{201D}' | '\u{2019}' | ')' | ']') {
                end += 1;
            }
            let at_break = end == chars.len() || chars[end].is_whitespace();
            if at_break && !(c == '.' && is_abbreviation(&chars, start, i, abbreviations)) {
                bounds.push((start, end));
                start = end;
            }
            i = end;
            continue;
        }
        i += 1;
    }
    bounds.push((start, chars.len()));

    let mut out = Vec::new();
    for (a, b) in bounds {
        let (mut a, mut b) = (a, b);
        while a < b && chars[a].is_whitespace() {
            a += 1;
        }
        while b > a && chars[b - 1].is_whitespace() {
            b -= 1;
        }
        if a < b {
            out.push(Sentence { index: out.len(), start: a, end: b, text: chars[a..b].iter().collect() });
        }
    }
    out
}

/// Whether the word ending with the period at `dot` is an abbreviation.
fn is_abbreviation(chars: &[char], floor: usize, dot: usize, abbreviations: &[&str]) -> bool {
    let mut w = dot;
    while w > floor && !chars[w - 1].is_whitespace() && !matches!(chars[w - 1], '(' | '"' | '\u{201C}') {
        w -= 1;
    }
    let word: String = chars[w..=dot].iter().collect::<String>().to_lowercase();
    abbreviations.iter().any(|a| *a == word)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::char_slice;

    fn texts(body: &str, abbr: &[&str]) -> Vec<String> {
        split_sentences_with(body, abbr).into_iter().map(|s| s.text).collect()
    }

    #[test]
    fn terminal_punctuation() {
        assert_eq!(texts("A. B? C!", &[]), vec!["A.", "B?", "C!"]);
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("  \n ").is_empty());
    }

    #[test]
    fn abbreviations_do_not_split() {
        assert_eq!(texts("Dr. Smith spoke.", ABBREVIATIONS), vec!["Dr. Smith spoke."]);
        assert_eq!(texts("Dr. Smith spoke.", &[]), vec!["Dr.", "Smith spoke."]);
        assert_eq!(texts("Aid from the U.S. arrived. Then more.", ABBREVIATIONS), vec!["Aid from the U.S. arrived.", "Then more."]);
    }

    #[test]
    fn quotes_decimals_and_paragraphs() {
        let body = "He said \"enough.\" Prices rose 3.5 percent!\n\nHeadline without stop\nstill same";
        assert_eq!(
            texts(body, ABBREVIATIONS),
            vec!["He said \"enough.\"", "Prices rose 3.5 percent!", "Headline without stop\nstill same"]
        );
    }

    #[test]
    fn offsets_index_into_body() {
        let body = "  Çà ira.  Gaza — night!  ";
        for s in split_sentences(body) {
            assert_eq!(char_slice(body, s.start, s.end), s.text);
        }
        assert_eq!(split_sentences(body).iter().map(|s| s.index).collect::<Vec<_>>(), vec![0, 1]);
    }
}
