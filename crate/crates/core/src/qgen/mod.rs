//! Question–answer pair generation by interrogative substitution.
//!
//! Each entity in a tagged sentence yields one question: the entity is
//! replaced by a type-specific interrogative (or removed, with the
//! interrogative moved to the front for conditions and parameters) and the
//! removed entity becomes the answer.

mod generate;
mod interrogative;

use thiserror::Error;

pub use generate::{
    generate_corpus, generate_corpus_with_entities, generate_pairs, normalize_question,
    parse_corpus, select_candidates, CorpusLine, EntityRecord, GeneratedPair, TokenSpan,
};
pub use interrogative::{Interrogative, InterrogativeMap, Placement};

#[derive(Debug, Error)]
pub enum QgenError {
    #[error("no interrogative mapped for entity type {0:?}")]
    UnmappedType(String),
    #[error("span {start}..{end} is invalid for a sentence of {len} tokens")]
    InvalidSpan {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("invalid interrogative map: {0}")]
    Map(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
