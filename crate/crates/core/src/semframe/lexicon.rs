//! Frame lexicon and the suffix-stripping lemmatizer it is matched with.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::taxonomy::{FrameInventory, TaxonomyError};

pub const LEXICON_FILE: &str = "lexicon.toml";
const STOCK_LEXICON: &str = include_str!("../../data/semframe/lexicon.toml");

/// A lexical unit: a lemma (possibly several words) plus a coarse part of speech.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LexicalUnit {
    pub lemma: Vec<String>,
    pub pos: String,
}

impl LexicalUnit {
    /// Parses `"air strike.n"`; a missing `.pos` suffix is allowed.
    pub fn parse(spec: &str) -> Result<LexicalUnit, String> {
        let (lemma, pos) = match spec.rsplit_once('.') {
            Some((l, p)) if !p.is_empty() && p.chars().all(|c| c.is_ascii_alphabetic()) => (l, p),
            _ => (spec, ""),
        };
        let lemma: Vec<String> = crate::text::folded_tokens(lemma);
        if lemma.is_empty() {
            return Err(format!("empty lexical unit {spec:?}"));
        }
        Ok(LexicalUnit { lemma, pos: pos.to_string() })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameUnits {
    name: String,
    units: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconFile {
    #[serde(rename = "frame")]
    frames: Vec<FrameUnits>,
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    /// Frames in file order, each with its units.
    pub frames: Vec<(String, Vec<LexicalUnit>)>,
    /// First lemma token -> (frame index, unit index), in file order.
    index: HashMap<String, Vec<(usize, usize)>>,
}

impl Lexicon {
    pub fn stock() -> Lexicon {
        Lexicon::from_toml(STOCK_LEXICON).expect("stock lexicon parses")
    }

    pub fn load(path: &Path) -> Result<Lexicon, TaxonomyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| TaxonomyError::Io { path: path.display().to_string(), source })?;
        Lexicon::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Lexicon, TaxonomyError> {
        let file: LexiconFile = toml::from_str(text)
            .map_err(|e| TaxonomyError::Parse { file: LEXICON_FILE.into(), message: e.to_string() })?;
        let mut problems = Vec::new();
        let mut frames = Vec::new();
        for f in file.frames {
            let mut seen = BTreeSet::new();
            let mut units = Vec::new();
            for spec in &f.units {
                match LexicalUnit::parse(spec) {
                    Ok(u) if seen.insert(u.clone()) => units.push(u),
                    Ok(_) => problems.push(format!("frame {:?}: duplicate lexical unit {spec:?}", f.name)),
                    Err(e) => problems.push(format!("frame {:?}: {e}", f.name)),
                }
            }
            frames.push((f.name, units));
        }
        if !problems.is_empty() {
            return Err(TaxonomyError::Validation(problems));
        }
        Ok(Lexicon::from_frames(frames))
    }

    pub fn from_frames(frames: Vec<(String, Vec<LexicalUnit>)>) -> Lexicon {
        let mut index: HashMap<String, Vec<(usize, usize)>> = HashMap::new();
        for (fi, (_, units)) in frames.iter().enumerate() {
            for (ui, u) in units.iter().enumerate() {
                index.entry(u.lemma[0].clone()).or_default().push((fi, ui));
            }
        }
        Lexicon { frames, index }
    }

    /// Every frame must be in the inventory (by exact canonical name).
    pub fn validate(&self, inventory: &FrameInventory) -> Result<(), TaxonomyError> {
        let problems: Vec<String> = self
            .frames
            .iter()
            .filter(|(name, _)| inventory.get(name).is_none())
            .map(|(name, _)| format!("lexicon frame {name:?} is not a frame of interest"))
            .collect();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(TaxonomyError::Validation(problems))
        }
    }

    pub(crate) fn units_starting_with(&self, lemma: &str) -> &[(usize, usize)] {
        self.index.get(lemma).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn unit(&self, frame: usize, unit: usize) -> &LexicalUnit {
        &self.frames[frame].1[unit]
    }

    pub fn frame_name(&self, frame: usize) -> &str {
        &self.frames[frame].0
    }
}

/// Irregular forms that suffix stripping cannot reach.
const EXCEPTIONS: &[(&str, &str)] = &[
    ("struck", "strike"),
    ("fought", "fight"),
    ("children", "child"),
    ("women", "woman"),
    ("men", "man"),
    ("people", "person"),
    ("fled", "flee"),
    ("shot", "shoot"),
    ("slain", "slay"),
    ("slew", "slay"),
    ("dying", "die"),
    ("knew", "know"),
    ("known", "know"),
    ("wives", "wife"),
    ("lives", "life"),
    ("feet", "foot"),
    ("died", "die"),
    ("hit", "hit"),
    ("began", "begin"),
    ("held", "hold"),
    ("taken", "take"),
    ("took", "take"),
    ("brought", "bring"),
    ("caught", "catch"),
    ("bombarded", "bombard"),
    ("elderly", "elderly"),
    ("casualties", "casualty"),
    ("fatalities", "fatality"),
    ("hostilities", "hostilities"),
];

fn is_consonant(c: char) -> bool {
    c.is_ascii_alphabetic() && !"aeiou".contains(c)
}

/// Possible lemmas of a folded token, most literal first. Over-generation is harmless
/// because candidates only matter when they hit a lexicon entry.
pub fn lemma_candidates(token: &str) -> Vec<String> {
    let mut base = token.to_lowercase();
    for poss in ["'s", "\u{2019}s"] {
        if let Some(b) = base.strip_suffix(poss) {
            base = b.to_string();
        }
    }
    let mut out = vec![base.clone()];
    let push = |s: String, out: &mut Vec<String>| {
        if s.chars().count() >= 2 && !out.contains(&s) {
            out.push(s);
        }
    };
    for (form, lemma) in EXCEPTIONS {
        if base == *form {
            push(lemma.to_string(), &mut out);
        }
    }
    let b = base.as_str();
    if let Some(stem) = b.strip_suffix("ies").or_else(|| b.strip_suffix("ied")) {
        push(format!("{stem}y"), &mut out);
    }
    if let Some(stem) = b.strip_suffix("es") {
        push(stem.to_string(), &mut out);
    }
    if let Some(stem) = b.strip_suffix('s') {
        if !stem.ends_with('s') {
            push(stem.to_string(), &mut out);
        }
    }
    for suffix in ["ed", "ing"] {
        if let Some(stem) = b.strip_suffix(suffix) {
            push(stem.to_string(), &mut out);
            push(format!("{stem}e"), &mut out);
            let mut cs = stem.chars().rev();
            if let (Some(x), Some(y)) = (cs.next(), cs.next()) {
                if x == y && is_consonant(x) {
                    push(stem[..stem.len() - x.len_utf8()].to_string(), &mut out);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::Taxonomies;

    fn has(token: &str, lemma: &str) -> bool {
        lemma_candidates(token).iter().any(|c| c == lemma)
    }

    #[test]
    fn inflections_reach_their_lemma() {
        for (tok, lemma) in [
            ("attacked", "attack"),
            ("attacks", "attack"),
            ("strikes", "strike"),
            ("struck", "strike"),
            ("killing", "kill"),
            ("shelling", "shell"),
            ("stopped", "stop"),
            ("firing", "fire"),
            ("fired", "fire"),
            ("razed", "raze"),
            ("families", "family"),
            ("dies", "die"),
            ("died", "die"),
            ("dying", "die"),
            ("children", "child"),
            ("Israel's", "israel"),
            ("clashes", "clash"),
            ("injured", "injure"),
        ] {
            assert!(has(tok, lemma), "{tok} -> {lemma}: {:?}", lemma_candidates(tok));
        }
        assert_eq!(lemma_candidates("Gaza")[0], "gaza");
        assert!(!has("class", "clas"));
    }

    #[test]
    fn unit_parsing() {
        let u = LexicalUnit::parse("air strike.n").unwrap();
        assert_eq!(u.lemma, vec!["air", "strike"]);
        assert_eq!(u.pos, "n");
        assert_eq!(LexicalUnit::parse("loss of life").unwrap().lemma.len(), 3);
        assert!(LexicalUnit::parse(".n").is_err());
    }

    #[test]
    fn stock_lexicon_covers_the_inventory() {
        let lex = Lexicon::stock();
        let tax = Taxonomies::stock();
        lex.validate(&tax.frames).unwrap();
        for f in &tax.frames.frames {
            assert!(lex.frames.iter().any(|(n, u)| n == &f.frame_name && !u.is_empty()), "{}", f.frame_name);
        }
    }

    #[test]
    fn rejects_duplicates_and_unknown_frames() {
        let dup = "[[frame]]\nname = \"Attack\"\nunits = [\"attack.v\", \"attack.v\"]\n";
        assert!(matches!(Lexicon::from_toml(dup), Err(TaxonomyError::Validation(_))));
        let unknown = Lexicon::from_toml("[[frame]]\nname = \"Being_born\"\nunits = [\"born.a\"]\n").unwrap();
        assert!(unknown.validate(&Taxonomies::stock().frames).is_err());
    }
}
