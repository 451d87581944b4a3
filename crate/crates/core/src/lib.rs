//! Judeo-Arabic to Arabic transliteration: script handling, rule-based
//! character mapping, parallel-corpus ingestion, word alignment, evaluation
//! and LLM-backed correction.

pub mod align;
pub mod correct;
pub mod corpus;
pub mod eval;
pub mod mapping;
pub mod pipeline;
pub mod script;
