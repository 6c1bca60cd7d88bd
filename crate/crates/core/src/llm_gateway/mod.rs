//! LLM access for generic frame classification and indicator extraction.
//!
//! Prompts are rendered from editable templates ([`prompt`]), sent to an
//! OpenAI-style chat-completion endpoint ([`transport`]), and the raw text is
//! recovered into JSON and validated against the taxonomy ([`parse`]).
//! Every indicator excerpt is checked against the article body ([`ground`]).

pub mod ground;
pub mod mock;
pub mod parse;
pub mod prompt;
pub mod recover;
pub mod transport;

use serde::{Deserialize, Serialize};

pub use ground::{ground_excerpt, Grounding};
pub use parse::{
    parse_generic_response, parse_indicator_response, GenericFrameAssignment, GenericParse, IndicatorInstance,
    IndicatorParse,
};
pub use prompt::{render_generic_prompt, render_indicator_prompt, PromptSettings, PromptTemplates, RenderedPrompt};
pub use transport::{Completion, CompletionError, EndpointConfig, LlmClient, API_KEY_ENV};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.user_text.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("user_text is empty".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(GatewayError::InvalidRequest(format!("temperature {} is negative", self.temperature)));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("article {0} has an empty body")]
    EmptyBody(String),
    #[error("invalid chat request: {0}")]
    InvalidRequest(String),
    #[error("endpoint configuration: {0}")]
    Config(String),
}
