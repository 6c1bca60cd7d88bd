//! Framing analysis for conflict news coverage.
//!
//! The crate is organised as a staged pipeline:
//!
//! - [`corpus`]: article model, ingestion, and the domain/keyword/topic/date/length filters.
//! - [`taxonomy`]: generic frames, war/peace indicator kinds, and frames of interest.
//! - [`llm_gateway`]: prompt rendering, the chat-completion transport, response recovery,
//!   and excerpt grounding.
//! - [`semframe`]: lexical-unit frame tagging, Assailant/Victim heuristics, and ingestion
//!   of occurrences produced by an external parser.
//! - [`analytics`]: regional aggregations over the extracted records.
//! - [`evalkit`]: multi-label evaluation of the generic frame classifier.
//! - [`pipeline`] and [`chart`]: stage orchestration, run manifest, and SVG report output.

pub mod analytics;
pub mod chart;
pub mod corpus;
pub mod evalkit;
pub mod jsonl;
pub mod llm_gateway;
pub mod pipeline;
pub mod semframe;
pub mod taxonomy;
pub mod testkit;
pub mod text;

pub use corpus::{Article, Region};
