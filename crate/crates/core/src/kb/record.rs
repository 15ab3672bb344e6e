use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// Location of an answer inside a standard document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceRef {
    pub doc: String,
    pub section: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    #[default]
    Manual,
    Generated,
}

/// One stored question variant. Records sharing a `group_id` are variants of
/// one answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbRecord {
    pub id: String,
    pub group_id: String,
    pub question: String,
    pub answer: String,
    pub source: SourceRef,
    pub origin: Origin,
    pub created_at: DateTime<Utc>,
}

/// A record as accepted on import: everything except question and answer
/// may be omitted. Unknown fields are ignored, so generated-pair lines
/// import directly.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportRecord {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub group_id: Option<String>,
    #[serde(default)]
    pub question: Option<String>,
    #[serde(default)]
    pub answer: Option<String>,
    #[serde(default)]
    pub source: Option<SourceRef>,
    #[serde(default)]
    pub origin: Option<Origin>,
    #[serde(default)]
    pub created_at: Option<DateTime<Utc>>,
}

impl From<KbRecord> for ImportRecord {
    fn from(r: KbRecord) -> Self {
        ImportRecord {
            id: Some(r.id),
            group_id: Some(r.group_id),
            question: Some(r.question),
            answer: Some(r.answer),
            source: Some(r.source),
            origin: Some(r.origin),
            created_at: Some(r.created_at),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Helpful,
    Unhelpful,
}

/// One asked question and what it matched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub id: String,
    pub question: String,
    pub timestamp: DateTime<Utc>,
    pub top_result_id: Option<String>,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackEntry {
    pub id: String,
    pub history_id: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub comment: String,
    pub timestamp: DateTime<Utc>,
}
