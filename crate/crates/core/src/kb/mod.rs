//! The knowledge library: question variants with answers and source
//! locations, query history, feedback, and similarity retrieval.

mod record;
mod retrieve;
mod store;

use thiserror::Error;

pub use record::{FeedbackEntry, HistoryEntry, ImportRecord, KbRecord, Origin, SourceRef, Verdict};
pub use retrieve::{jaccard, retrieve, KbIndex, QueryResult, RetrieveOptions};
pub use store::{parse_import, KbStats, KbStore, StorePaths};

use crate::sim::SimError;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid record: {0}")]
    Validation(String),
    #[error("duplicate record id {0:?}")]
    Conflict(String),
    #[error("no history entry {0:?}")]
    NotFound(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
