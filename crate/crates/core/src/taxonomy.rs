//! Frame inventories: generic news frames, war/peace indicator kinds, and
//! semantic frames of interest.
//!
//! Inventories are loaded from three TOML files in a config directory
//! (`generic_frames.toml`, `indicators.toml`, `frames_of_interest.toml`).
//! The stock files ship inside the crate and are available via [`Taxonomies::stock`].
//! Loading checks the files against the canonical entries: generic frames form a
//! closed set, while indicator kinds and frames of interest may be extended.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const GENERIC_FILE: &str = "generic_frames.toml";
pub const INDICATOR_FILE: &str = "indicators.toml";
pub const FRAMES_FILE: &str = "frames_of_interest.toml";

const STOCK_GENERIC: &str = include_str!("../data/taxonomy/generic_frames.toml");
const STOCK_INDICATORS: &str = include_str!("../data/taxonomy/indicators.toml");
const STOCK_FRAMES: &str = include_str!("../data/taxonomy/frames_of_interest.toml");

pub const NONE_LABEL: &str = "None";

pub const CANONICAL_GENERIC_LABELS: [&str; 15] = [
    "Economic",
    "Capacity and resources",
    "Morality",
    "Fairness and equality",
    "Legality, constitutionality and jurisprudence",
    "Policy prescription and evaluation",
    "Crime and punishment",
    "Security and defense",
    "Health and safety",
    "Quality of life",
    "Cultural identity",
    "Public Opinion",
    "Political",
    "External regulation and reputation",
    NONE_LABEL,
];

/// `(path, has_target, has_reasoning)` for every canonical indicator kind.
pub const CANONICAL_INDICATORS: [(&str, bool, bool); 21] = [
    ("war.adversarial_frame.use_of_adversarial_language", true, true),
    ("war.adversarial_frame.attribution_of_blame", true, true),
    ("war.focus_on_elites", false, false),
    ("war.attribution_of_blame", true, true),
    ("war.labelling_of_people", true, true),
    ("war.language.demonizing_language", true, true),
    ("war.language.dehumanizing_language", true, true),
    ("war.language.victimizing_language", true, true),
    ("war.language.passive_language", true, true),
    ("war.partisan_framing", true, true),
    ("war.focus_on_visible_effects_of_war", false, false),
    ("war.nationalistic_frame.emphasis_on_national_interests", true, true),
    ("war.nationalistic_frame.portrayal_of_national_strength", true, true),
    ("war.military_solution", false, false),
    ("peace.peace_frame.focus_on_consequences_of_conflict", true, true),
    ("peace.peace_frame.inclusion_of_peace_proposals", true, true),
    ("peace.peace_frame.representation_of_multiple_perspectives", true, true),
    ("peace.focus_on_invisible_effects_of_war", true, false),
    ("peace.peace_orientation", true, true),
    ("peace.people_orientation", true, true),
    ("peace.victim_orientation", true, true),
];

pub const CANONICAL_VISIBLE_FRAMES: [&str; 11] = [
    "Hostile_encounter",
    "Attack",
    "Killing",
    "Quantified_mass",
    "Military_operation",
    "Building",
    "Terrorism",
    "Death",
    "Destroying",
    "Committing_crime",
    "Firing",
];

pub const CANONICAL_INVISIBLE_FRAMES: [&str; 9] = [
    "People",
    "People_by_age",
    "Emotion_directed",
    "Fear",
    "Kinship",
    "Medical_conditions",
    "Assistance",
    "Awareness",
    "Being_at_risk",
];

#[derive(Debug, thiserror::Error)]
pub enum TaxonomyError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: {message}")]
    Parse { file: String, message: String },
    #[error("taxonomy validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error("unknown indicator path {0:?}")]
    UnknownPath(String),
}

/// Case-fold and collapse internal whitespace; used for every name lookup.
pub fn normalize_name(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

// ---------------------------------------------------------------------------
// Generic frames

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericFrame {
    pub label: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mfc_code: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericInventory {
    #[serde(rename = "frame")]
    pub frames: Vec<GenericFrame>,
}

impl GenericInventory {
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.frames.iter().map(|f| f.label.as_str())
    }

    /// Canonical label for a name, matching labels and aliases ignoring case and spacing.
    pub fn resolve(&self, name: &str) -> Option<&str> {
        let n = normalize_name(name);
        if n.is_empty() {
            return None;
        }
        self.frames
            .iter()
            .find(|f| normalize_name(&f.label) == n || f.aliases.iter().any(|a| normalize_name(a) == n))
            .map(|f| f.label.as_str())
    }

    /// Canonical label for an MFC frame code such as `5` or `5.2` (the integer part is the dimension).
    pub fn resolve_code(&self, code: f64) -> Option<&str> {
        if !code.is_finite() || code < 1.0 {
            return None;
        }
        let dim = code.trunc() as u32;
        self.frames.iter().find(|f| f.mfc_code == Some(dim)).map(|f| f.label.as_str())
    }

    pub fn contains(&self, label: &str) -> bool {
        self.frames.iter().any(|f| f.label == label)
    }

    fn validate(&self, problems: &mut Vec<String>) {
        let mut seen = BTreeSet::new();
        for f in &self.frames {
            if !seen.insert(f.label.as_str()) {
                problems.push(format!("duplicate generic frame {:?}", f.label));
            }
            if !CANONICAL_GENERIC_LABELS.contains(&f.label.as_str()) {
                problems.push(format!("unknown generic frame {:?}", f.label));
            }
        }
        for label in CANONICAL_GENERIC_LABELS {
            if !seen.contains(label) {
                problems.push(format!("missing generic frame {label:?}"));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Indicator kinds

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    War,
    Peace,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::War => "war",
            Polarity::Peace => "peace",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorKind {
    pub path: String,
    pub polarity: Polarity,
    pub has_target: bool,
    pub has_reasoning: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl IndicatorKind {
    /// Path segments below the polarity, e.g. `["language", "demonizing_language"]`.
    pub fn keys(&self) -> Vec<&str> {
        self.path.split('.').skip(1).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSchema {
    pub war_key: String,
    pub peace_key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorInventory {
    pub schema: IndicatorSchema,
    #[serde(rename = "indicator")]
    pub kinds: Vec<IndicatorKind>,
}

impl IndicatorInventory {
    pub fn get(&self, path: &str) -> Option<&IndicatorKind> {
        self.kinds.iter().find(|k| k.path == path)
    }

    pub fn polarity_of(&self, path: &str) -> Result<Polarity, TaxonomyError> {
        self.get(path).map(|k| k.polarity).ok_or_else(|| TaxonomyError::UnknownPath(path.to_string()))
    }

    pub fn of_polarity(&self, polarity: Polarity) -> impl Iterator<Item = &IndicatorKind> {
        self.kinds.iter().filter(move |k| k.polarity == polarity)
    }

    pub fn top_key(&self, polarity: Polarity) -> &str {
        match polarity {
            Polarity::War => &self.schema.war_key,
            Polarity::Peace => &self.schema.peace_key,
        }
    }

    fn validate(&self, problems: &mut Vec<String>) {
        let mut seen = BTreeSet::new();
        for k in &self.kinds {
            if !seen.insert(k.path.as_str()) {
                problems.push(format!("duplicate indicator path {:?}", k.path));
            }
            let mut segs = k.path.split('.');
            let head = segs.next().unwrap_or("");
            if segs.next().is_none() || k.path.split('.').any(str::is_empty) {
                problems.push(format!("malformed indicator path {:?}", k.path));
            }
            if head != k.polarity.as_str() {
                problems.push(format!("indicator {:?} declares polarity {} but is filed under {head:?}", k.path, k.polarity));
            }
            if let Some((_, t, r)) = CANONICAL_INDICATORS.iter().find(|(p, _, _)| *p == k.path) {
                if (k.has_target, k.has_reasoning) != (*t, *r) {
                    problems.push(format!(
                        "indicator {:?} must have has_target={t}, has_reasoning={r}",
                        k.path
                    ));
                }
            }
        }
        // A path may not be both a leaf and a branch.
        for k in &self.kinds {
            let prefix = format!("{}.", k.path);
            if self.kinds.iter().any(|o| o.path.starts_with(&prefix)) {
                problems.push(format!("indicator path {:?} is also a parent of other paths", k.path));
            }
        }
        for (path, _, _) in CANONICAL_INDICATORS {
            if !seen.contains(path) {
                problems.push(format!("missing indicator path {path:?}"));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Frames of interest

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectClass {
    Visible,
    Invisible,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameOfInterest {
    #[serde(rename = "name")]
    pub frame_name: String,
    pub effect_class: EffectClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub roles_of_interest: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub role_labels: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl FrameOfInterest {
    /// Reporting label for a raw frame element, or `None` if the role is not of interest.
    pub fn reporting_role(&self, raw_role: &str) -> Option<String> {
        let n = normalize_name(raw_role);
        let raw = self.roles_of_interest.iter().find(|r| normalize_name(r) == n)?;
        Some(self.role_labels.get(raw).cloned().unwrap_or_else(|| raw.clone()))
    }

    /// Raw frame element that reports under `label` (inverse of [`reporting_role`](Self::reporting_role)).
    pub fn raw_role_for(&self, label: &str) -> Option<&str> {
        self.roles_of_interest
            .iter()
            .find(|r| self.role_labels.get(*r).map(String::as_str).unwrap_or(r.as_str()) == label)
            .map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameInventory {
    #[serde(rename = "frame")]
    pub frames: Vec<FrameOfInterest>,
}

impl FrameInventory {
    pub fn get(&self, name: &str) -> Option<&FrameOfInterest> {
        self.frames.iter().find(|f| f.frame_name == name)
    }

    /// Looks a frame up by name or alias, ignoring case.
    pub fn resolve(&self, name: &str) -> Option<&FrameOfInterest> {
        let n = normalize_name(name);
        self.frames.iter().find(|f| {
            normalize_name(&f.frame_name) == n || f.aliases.iter().any(|a| normalize_name(a) == n)
        })
    }

    pub fn effect_class(&self, name: &str) -> Option<EffectClass> {
        self.get(name).map(|f| f.effect_class)
    }

    fn validate(&self, problems: &mut Vec<String>) {
        let mut seen = BTreeSet::new();
        for f in &self.frames {
            if !seen.insert(f.frame_name.as_str()) {
                problems.push(format!("duplicate frame of interest {:?}", f.frame_name));
            }
            for raw in f.role_labels.keys() {
                if !f.roles_of_interest.contains(raw) {
                    problems.push(format!("frame {:?}: role label for {raw:?} which is not a role of interest", f.frame_name));
                }
            }
        }
        let mut check = |names: &[&str], class: EffectClass| {
            for name in names {
                match self.get(name) {
                    None => problems.push(format!("missing frame of interest {name:?}")),
                    Some(f) if f.effect_class != class => {
                        problems.push(format!("frame {name:?} must have effect_class {class:?}"))
                    }
                    _ => {}
                }
            }
        };
        check(&CANONICAL_VISIBLE_FRAMES, EffectClass::Visible);
        check(&CANONICAL_INVISIBLE_FRAMES, EffectClass::Invisible);
        if let Some(attack) = self.get("Attack") {
            for role in ["Assailant", "Victim"] {
                if !attack.roles_of_interest.iter().any(|r| r == role) {
                    problems.push(format!("frame \"Attack\" must list role {role:?}"));
                }
            }
        }
        if let Some(killing) = self.get("Killing") {
            if killing.reporting_role("Killer").as_deref() != Some("Assailant") {
                problems.push("frame \"Killing\" must report role \"Killer\" as \"Assailant\"".to_string());
            }
            if killing.reporting_role("Victim").is_none() {
                problems.push("frame \"Killing\" must list role \"Victim\"".to_string());
            }
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomies {
    pub generic: GenericInventory,
    pub indicators: IndicatorInventory,
    pub frames: FrameInventory,
}

impl Taxonomies {
    /// The inventories shipped with the crate.
    pub fn stock() -> Taxonomies {
        Taxonomies::from_strs(STOCK_GENERIC, STOCK_INDICATORS, STOCK_FRAMES).expect("stock taxonomy is valid")
    }

    pub fn from_strs(generic: &str, indicators: &str, frames: &str) -> Result<Taxonomies, TaxonomyError> {
        let t = Taxonomies {
            generic: parse(GENERIC_FILE, generic)?,
            indicators: parse(INDICATOR_FILE, indicators)?,
            frames: parse(FRAMES_FILE, frames)?,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), TaxonomyError> {
        let mut problems = Vec::new();
        self.generic.validate(&mut problems);
        self.indicators.validate(&mut problems);
        self.frames.validate(&mut problems);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(TaxonomyError::Validation(problems))
        }
    }

    /// Writes the three inventory files into `dir` in normalized form.
    pub fn write_dir(&self, dir: &Path) -> Result<(), TaxonomyError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| TaxonomyError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        for (file, text) in [
            (GENERIC_FILE, to_toml(&self.generic)),
            (INDICATOR_FILE, to_toml(&self.indicators)),
            (FRAMES_FILE, to_toml(&self.frames)),
        ] {
            let p = dir.join(file);
            fs::write(&p, text).map_err(io(&p))?;
        }
        Ok(())
    }
}

/// Loads and validates the three inventory files in `dir`.
pub fn load_taxonomies(dir: &Path) -> Result<Taxonomies, TaxonomyError> {
    let read = |file: &str| {
        let p = dir.join(file);
        fs::read_to_string(&p).map_err(|source| TaxonomyError::Io { path: p.display().to_string(), source })
    };
    Taxonomies::from_strs(&read(GENERIC_FILE)?, &read(INDICATOR_FILE)?, &read(FRAMES_FILE)?)
}

fn parse<T: serde::de::DeserializeOwned>(file: &str, text: &str) -> Result<T, TaxonomyError> {
    toml::from_str(text).map_err(|e| TaxonomyError::Parse { file: file.to_string(), message: e.to_string() })
}

fn to_toml<T: Serialize>(v: &T) -> String {
    toml::to_string(v).expect("taxonomy types serialize to TOML")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stock_counts() {
        let t = Taxonomies::stock();
        assert_eq!(t.generic.frames.len(), 15);
        assert_eq!(t.indicators.of_polarity(Polarity::War).count(), 14);
        assert_eq!(t.indicators.of_polarity(Polarity::Peace).count(), 7);
        let visible = t.frames.frames.iter().filter(|f| f.effect_class == EffectClass::Visible).count();
        assert!(visible >= 11);
    }

    #[test]
    fn polarity_lookup() {
        let t = Taxonomies::stock();
        assert_eq!(t.indicators.polarity_of("war.partisan_framing").unwrap(), Polarity::War);
        assert_eq!(t.indicators.polarity_of("peace.victim_orientation").unwrap(), Polarity::Peace);
        assert!(matches!(t.indicators.polarity_of("war.banana"), Err(TaxonomyError::UnknownPath(_))));
    }

    #[test]
    fn two_attribution_of_blame_paths() {
        let t = Taxonomies::stock();
        assert!(t.indicators.get("war.attribution_of_blame").is_some());
        assert!(t.indicators.get("war.adversarial_frame.attribution_of_blame").is_some());
    }

    #[test]
    fn tuple_shapes() {
        let t = Taxonomies::stock();
        let elites = t.indicators.get("war.focus_on_elites").unwrap();
        assert!(!elites.has_target && !elites.has_reasoning);
        let invisible = t.indicators.get("peace.focus_on_invisible_effects_of_war").unwrap();
        assert!(invisible.has_target && !invisible.has_reasoning);
    }

    #[test]
    fn missing_generic_label_is_named() {
        let generic = STOCK_GENERIC.replace("label = \"Morality\"", "label = \"Mortality\"");
        let err = Taxonomies::from_strs(&generic, STOCK_INDICATORS, STOCK_FRAMES).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("missing generic frame \"Morality\""), "{msg}");
        assert!(msg.contains("unknown generic frame \"Mortality\""), "{msg}");
    }

    #[test]
    fn missing_indicator_is_named() {
        let ind = STOCK_INDICATORS.replace("war.military_solution", "war.military_solutions");
        let err = Taxonomies::from_strs(STOCK_GENERIC, &ind, STOCK_FRAMES).unwrap_err();
        assert!(err.to_string().contains("missing indicator path \"war.military_solution\""));
    }

    #[test]
    fn unknown_keys_rejected() {
        let generic = STOCK_GENERIC.replacen("mfc_code = 1", "mfc_code = 1\ncolour = \"red\"", 1);
        assert!(matches!(
            Taxonomies::from_strs(&generic, STOCK_INDICATORS, STOCK_FRAMES),
            Err(TaxonomyError::Parse { .. })
        ));
    }

    #[test]
    fn custom_invisible_frame_accepted() {
        let frames = format!("{STOCK_FRAMES}\n[[frame]]\nname = \"Grief\"\neffect_class = \"invisible\"\n");
        let t = Taxonomies::from_strs(STOCK_GENERIC, STOCK_INDICATORS, &frames).unwrap();
        assert_eq!(t.frames.effect_class("Grief"), Some(EffectClass::Invisible));
    }

    #[test]
    fn custom_indicator_accepted_with_consistent_polarity() {
        let extra = "\n[[indicator]]\npath = \"peace.solution_orientation\"\npolarity = \"peace\"\nhas_target = true\nhas_reasoning = true\n";
        let t = Taxonomies::from_strs(STOCK_GENERIC, &format!("{STOCK_INDICATORS}{extra}"), STOCK_FRAMES).unwrap();
        assert_eq!(t.indicators.kinds.len(), 22);
        let bad = extra.replace("polarity = \"peace\"", "polarity = \"war\"");
        assert!(Taxonomies::from_strs(STOCK_GENERIC, &format!("{STOCK_INDICATORS}{bad}"), STOCK_FRAMES).is_err());
    }

    #[test]
    fn name_resolution() {
        let t = Taxonomies::stock();
        assert_eq!(t.generic.resolve("  security   AND defense "), Some("Security and defense"));
        assert_eq!(t.generic.resolve("cap&res"), Some("Capacity and resources"));
        assert_eq!(t.generic.resolve("Weather"), None);
        assert_eq!(t.generic.resolve_code(5.2), Some("Legality, constitutionality and jurisprudence"));
        assert_eq!(t.generic.resolve_code(15.0), Some(NONE_LABEL));
        assert_eq!(t.frames.resolve("buildfiring").unwrap().frame_name, "Firing");
        assert_eq!(t.frames.resolve("people_by_AGE").unwrap().frame_name, "People_by_age");
    }

    #[test]
    fn killer_reports_as_assailant() {
        let t = Taxonomies::stock();
        let killing = t.frames.get("Killing").unwrap();
        assert_eq!(killing.reporting_role("Killer").as_deref(), Some("Assailant"));
        assert_eq!(killing.raw_role_for("Assailant"), Some("Killer"));
        assert_eq!(killing.reporting_role("Place"), None);
        let attack = t.frames.get("Attack").unwrap();
        assert_eq!(attack.reporting_role("weapon").as_deref(), Some("Weapon"));
    }

    #[test]
    fn round_trip_through_directory() {
        let t = Taxonomies::stock();
        let dir = tempfile::tempdir().unwrap();
        t.write_dir(dir.path()).unwrap();
        let back = load_taxonomies(dir.path()).unwrap();
        assert_eq!(back, t);
        // Serialization is a fixed point.
        let again = tempfile::tempdir().unwrap();
        back.write_dir(again.path()).unwrap();
        for f in [GENERIC_FILE, INDICATOR_FILE, FRAMES_FILE] {
            assert_eq!(fs::read(dir.path().join(f)).unwrap(), fs::read(again.path().join(f)).unwrap());
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_taxonomies(dir.path()), Err(TaxonomyError::Io { .. })));
    }
}
