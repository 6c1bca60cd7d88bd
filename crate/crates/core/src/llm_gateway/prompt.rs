//! Prompt rendering for the two extraction tasks.
//!
//! Templates contain `{frames}`, `{scaffold}` and `{article}` placeholders. Substitution is a
//! single left-to-right pass over the template, so braces inside substituted text (article
//! bodies often contain them) are copied through untouched and never re-expanded.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ChatRequest, GatewayError};
use crate::corpus::Article;
use crate::taxonomy::{GenericInventory, IndicatorInventory, IndicatorKind, Polarity};

pub const INSTANCE_PLACEHOLDER: &str = "<List of instances from the article>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub generic_system: String,
    pub generic_user: String,
    pub indicator_system: String,
    pub indicator_user: String,
}

impl PromptTemplates {
    pub fn stock() -> PromptTemplates {
        PromptTemplates {
            generic_system: include_str!("../../data/prompts/generic_system.txt").to_string(),
            generic_user: include_str!("../../data/prompts/generic_user.txt").to_string(),
            indicator_system: include_str!("../../data/prompts/indicator_system.txt").to_string(),
            indicator_user: include_str!("../../data/prompts/indicator_user.txt").to_string(),
        }
    }

    /// Loads templates from `dir`; files that are absent fall back to the stock text.
    pub fn load_dir(dir: &Path) -> std::io::Result<PromptTemplates> {
        let stock = PromptTemplates::stock();
        let read = |name: &str, fallback: String| -> std::io::Result<String> {
            let p = dir.join(name);
            if p.exists() {
                fs::read_to_string(p)
            } else {
                Ok(fallback)
            }
        };
        Ok(PromptTemplates {
            generic_system: read("generic_system.txt", stock.generic_system)?,
            generic_user: read("generic_user.txt", stock.generic_user)?,
            indicator_system: read("indicator_system.txt", stock.indicator_system)?,
            indicator_user: read("indicator_user.txt", stock.indicator_user)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PromptSettings {
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_output")]
    pub max_output_tokens: u32,
    /// Article bodies longer than this many tokens are cut. `None` disables truncation.
    #[serde(default)]
    pub max_input_tokens: Option<usize>,
}

fn default_max_output() -> u32 {
    2048
}

impl Default for PromptSettings {
    fn default() -> Self {
        PromptSettings { model: "command-r".into(), temperature: 0.0, max_output_tokens: 2048, max_input_tokens: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub request: ChatRequest,
    pub truncated: bool,
}

pub fn render_generic_prompt(
    article: &Article,
    inventory: &GenericInventory,
    templates: &PromptTemplates,
    settings: &PromptSettings,
) -> Result<RenderedPrompt, GatewayError> {
    let (body, truncated) = prepare_body(article, settings)?;
    let frames = frame_list(inventory);
    let user = fill(&templates.generic_user, &[("frames", &frames), ("article", body)]);
    Ok(RenderedPrompt { request: request(settings, &templates.generic_system, user), truncated })
}

pub fn render_indicator_prompt(
    article: &Article,
    inventory: &IndicatorInventory,
    templates: &PromptTemplates,
    settings: &PromptSettings,
) -> Result<RenderedPrompt, GatewayError> {
    let (body, truncated) = prepare_body(article, settings)?;
    let scaffold = indicator_scaffold(inventory);
    let user = fill(&templates.indicator_user, &[("scaffold", &scaffold), ("article", body)]);
    Ok(RenderedPrompt { request: request(settings, &templates.indicator_system, user), truncated })
}

fn request(settings: &PromptSettings, system: &str, user: String) -> ChatRequest {
    ChatRequest {
        model: settings.model.clone(),
        system_text: system.to_string(),
        user_text: user,
        temperature: settings.temperature,
        max_output_tokens: settings.max_output_tokens,
    }
}

fn prepare_body<'a>(article: &'a Article, settings: &PromptSettings) -> Result<(&'a str, bool), GatewayError> {
    if article.body.trim().is_empty() {
        return Err(GatewayError::EmptyBody(article.id.clone()));
    }
    Ok(truncate_tokens(&article.body, settings.max_input_tokens))
}

/// Cuts `text` just after its `limit`-th token.
pub fn truncate_tokens(text: &str, limit: Option<usize>) -> (&str, bool) {
    let Some(limit) = limit else { return (text, false) };
    let tokens = crate::text::token_indices(text);
    if tokens.len() <= limit {
        return (text, false);
    }
    if limit == 0 {
        return ("", true);
    }
    let (start, tok) = tokens[limit - 1];
    (&text[..start + tok.len()], true)
}

/// `Label - description` lines; all but the last end with a comma, the last with a period.
pub fn frame_list(inventory: &GenericInventory) -> String {
    let n = inventory.frames.len();
    inventory
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| format!("{} - {}{}", f.label, f.description, if i + 1 == n { "." } else { "," }))
        .collect::<Vec<_>>()
        .join("\n")
}

enum Node<'a> {
    Leaf(&'a IndicatorKind),
    Branch(Vec<(&'a str, Node<'a>)>),
}

impl<'a> Node<'a> {
    fn insert(&mut self, keys: &[&'a str], kind: &'a IndicatorKind) {
        let Node::Branch(children) = self else { return };
        let (head, rest) = keys.split_first().expect("indicator paths have at least one key below the polarity");
        if rest.is_empty() {
            children.push((head, Node::Leaf(kind)));
            return;
        }
        if let Some((_, child)) = children.iter_mut().find(|(k, n)| k == head && matches!(n, Node::Branch(_))) {
            child.insert(rest, kind);
        } else {
            let mut child = Node::Branch(Vec::new());
            child.insert(rest, kind);
            children.push((head, child));
        }
    }

    fn render(&self, out: &mut String, depth: usize) {
        match self {
            Node::Leaf(kind) => out.push_str(&leaf_shape(kind)),
            Node::Branch(children) => {
                out.push_str("{\n");
                for (i, (key, child)) in children.iter().enumerate() {
                    out.push_str(&"  ".repeat(depth + 1));
                    out.push_str(&format!("\"{key}\": "));
                    child.render(out, depth + 1);
                    if i + 1 < children.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                out.push_str(&"  ".repeat(depth));
                out.push('}');
            }
        }
    }
}

fn leaf_shape(kind: &IndicatorKind) -> String {
    match (kind.has_target, kind.has_reasoning) {
        (false, false) => format!("[{INSTANCE_PLACEHOLDER}]"),
        (true, false) => format!("[({INSTANCE_PLACEHOLDER}, <target>)]"),
        (false, true) => format!("[({INSTANCE_PLACEHOLDER}, <reasoning>)]"),
        (true, true) => format!("[({INSTANCE_PLACEHOLDER}, <target>, <reasoning>)]"),
    }
}

/// The JSON answer skeleton, generated from the inventory in file order.
pub fn indicator_scaffold(inventory: &IndicatorInventory) -> String {
    let mut root = Node::Branch(Vec::new());
    for polarity in [Polarity::War, Polarity::Peace] {
        let mut branch = Node::Branch(Vec::new());
        for kind in inventory.of_polarity(polarity) {
            branch.insert(&kind.keys(), kind);
        }
        if let Node::Branch(children) = &mut root {
            children.push((inventory.top_key(polarity), branch));
        }
    }
    let mut out = String::new();
    root.render(&mut out, 0);
    out
}

/// Single-pass placeholder substitution. Only the listed names are recognised.
pub fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + values.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    while let Some(pos) = rest.find('{') {
        out.push_str(&rest[..pos]);
        let after = &rest[pos + 1..];
        let hit = values.iter().find(|(name, _)| after.starts_with(name) && after[name.len()..].starts_with('}'));
        match hit {
            Some((name, value)) => {
                out.push_str(value);
                rest = &after[name.len() + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
