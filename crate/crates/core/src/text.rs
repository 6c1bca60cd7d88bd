//! Shared text utilities: tokenization, case folding, and offset conversion.
//!
//! Tokens are Unicode words (UAX #29 word boundaries). Segments made only of
//! punctuation or whitespace are not tokens, so `"Gaza, Israel"` yields
//! `["Gaza", "Israel"]`.

use unicode_segmentation::UnicodeSegmentation;

/// Splits `text` into Unicode words. Punctuation-only segments are dropped.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.unicode_words().collect()
}

/// Like [`tokenize`], with the byte offset of each token.
pub fn token_indices(text: &str) -> Vec<(usize, &str)> {
    text.unicode_word_indices().collect()
}

/// Tokens with their char spans `[start, end)`.
pub fn token_spans(text: &str) -> Vec<(usize, usize, &str)> {
    let mut out = Vec::new();
    let (mut byte, mut ch) = (0, 0);
    for (b, tok) in text.unicode_word_indices() {
        ch += text[byte..b].chars().count();
        let len = tok.chars().count();
        out.push((ch, ch + len, tok));
        ch += len;
        byte = b + tok.len();
    }
    out
}

/// Number of tokens in `text`.
pub fn token_count(text: &str) -> usize {
    text.unicode_words().count()
}

pub fn fold(s: &str) -> String {
    s.to_lowercase()
}

/// Lowercased tokens of `text`.
pub fn folded_tokens(text: &str) -> Vec<String> {
    text.unicode_words().map(fold).collect()
}

/// True when `needle` occurs as a contiguous run inside `haystack`.
pub fn contains_sequence(haystack: &[String], needle: &[String]) -> bool {
    if needle.is_empty() || needle.len() > haystack.len() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Converts a byte offset into `s` to a char (Unicode scalar) offset.
pub fn byte_to_char(s: &str, byte: usize) -> usize {
    s[..byte].chars().count()
}

/// Converts a char offset into `s` to a byte offset. Offsets past the end clamp to `s.len()`.
pub fn char_to_byte(s: &str, ch: usize) -> usize {
    s.char_indices().nth(ch).map(|(b, _)| b).unwrap_or(s.len())
}

/// Substring of `s` between char offsets `[start, end)`.
pub fn char_slice(s: &str, start: usize, end: usize) -> &str {
    let b0 = char_to_byte(s, start);
    let b1 = char_to_byte(s, end);
    &s[b0..b1.max(b0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_spans_are_char_offsets() {
        let s = "Çà va, Gaza—now";
        let spans = token_spans(s);
        assert_eq!(spans.iter().map(|t| t.2).collect::<Vec<_>>(), vec!["Çà", "va", "Gaza", "now"]);
        for (a, b, tok) in spans {
            assert_eq!(char_slice(s, a, b), tok);
        }
    }

    #[test]
    fn punctuation_is_not_a_token() {
        assert_eq!(tokenize("Gaza, Israel"), vec!["Gaza", "Israel"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize(" ,.;!? — ").is_empty());
    }

    #[test]
    fn twelve_word_fixture_sentence() {
        // 12 words, 2 commas.
        let s = "Officials said on Monday that aid trucks, fuel and water, reached Rafah";
        assert_eq!(token_count(s), 12);
    }

    #[test]
    fn unicode_words_and_numbers() {
        assert_eq!(tokenize("Israel's café 1,200 people"), vec!["Israel's", "café", "1,200", "people"]);
        assert_eq!(tokenize("air-strike"), vec!["air", "strike"]);
    }

    #[test]
    fn sequence_matching_is_whole_word() {
        let hay = folded_tokens("Strikes on Gaza continued");
        assert!(contains_sequence(&hay, &folded_tokens("gaza")));
        assert!(!contains_sequence(&folded_tokens("Gazania flowers"), &folded_tokens("Gaza")));
        assert!(contains_sequence(&hay, &folded_tokens("on gaza")));
    }

    #[test]
    fn char_offsets_round_trip() {
        let s = "naïve … text";
        let b = s.find("text").unwrap();
        let c = byte_to_char(s, b);
        assert_eq!(c, 8);
        assert_eq!(char_to_byte(s, c), b);
        assert_eq!(char_slice(s, 8, 12), "text");
    }
}
