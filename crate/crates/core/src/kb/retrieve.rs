use std::cmp::Ordering;
use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{KbError, KbRecord};
use crate::sim::{EncodedSentence, SimPipeline};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub record: KbRecord,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrieveOptions {
    pub top_k: usize,
    /// Candidates kept by the token-overlap stage; 0 keeps every record.
    pub prefilter_m: usize,
    /// Results scoring below this are dropped.
    pub min_score: f64,
}

impl Default for RetrieveOptions {
    fn default() -> Self {
        RetrieveOptions {
            top_k: 5,
            prefilter_m: 0,
            min_score: 0.0,
        }
    }
}

struct IndexEntry {
    tokens: BTreeSet<String>,
    encoded: Option<EncodedSentence>,
}

/// Tokenized and encoded stored questions, aligned with the record list
/// they were built from.
pub struct KbIndex {
    entries: Vec<IndexEntry>,
}

impl KbIndex {
    pub fn build(records: &[KbRecord], pipeline: &SimPipeline) -> Self {
        let mut index = KbIndex {
            entries: Vec::new(),
        };
        index.extend(records, pipeline);
        index
    }

    /// Appends entries for records added after the index was built.
    pub fn extend(&mut self, records: &[KbRecord], pipeline: &SimPipeline) {
        let fresh: Vec<IndexEntry> = records
            .par_iter()
            .map(|r| {
                let tokenized = pipeline.tokenize(&r.question);
                IndexEntry {
                    tokens: tokenized.tokens().iter().cloned().collect(),
                    encoded: pipeline.model.encode(tokenized.ids()).ok(),
                }
            })
            .collect();
        self.entries.extend(fresh);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Shared unique tokens over the union; 0 when both sets are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn by_score_then_id(a: (f64, &str), b: (f64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

/// Two-stage retrieval: token-overlap prefilter, then similarity scoring.
/// Results are sorted by score descending, ties by record id ascending.
pub fn retrieve(
    question: &str,
    records: &[KbRecord],
    index: &KbIndex,
    pipeline: &SimPipeline,
    options: &RetrieveOptions,
) -> Result<Vec<QueryResult>, KbError> {
    if index.len() != records.len() {
        return Err(KbError::Validation(format!(
            "index covers {} records, store has {}",
            index.len(),
            records.len()
        )));
    }
    if options.top_k == 0 || records.is_empty() {
        return Ok(Vec::new());
    }
    let query = pipeline.tokenize(question);
    if query.is_empty() {
        return Ok(Vec::new());
    }
    let query_tokens: BTreeSet<String> = query.tokens().iter().cloned().collect();
    let encoded_query = pipeline.model.encode(query.ids())?;

    let mut candidates: Vec<usize> = (0..records.len())
        .filter(|&i| index.entries[i].encoded.is_some())
        .collect();
    if options.prefilter_m > 0 && candidates.len() > options.prefilter_m {
        let overlap: Vec<f64> = candidates
            .iter()
            .map(|&i| jaccard(&query_tokens, &index.entries[i].tokens))
            .collect();
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by(|&x, &y| {
            by_score_then_id(
                (overlap[x], &records[candidates[x]].id),
                (overlap[y], &records[candidates[y]].id),
            )
        });
        order.truncate(options.prefilter_m);
        candidates = order.into_iter().map(|k| candidates[k]).collect();
    }

    let scored: Vec<(usize, f64)> = candidates
        .par_iter()
        .map(|&i| {
            let entry = index.entries[i].encoded.as_ref().expect("filtered above");
            Ok((
                i,
                pipeline.model.score_encoded(&encoded_query, entry)?.score,
            ))
        })
        .collect::<Result<_, KbError>>()?;
    let mut scored: Vec<(usize, f64)> = scored
        .into_iter()
        .filter(|&(_, s)| s >= options.min_score)
        .collect();
    scored
        .sort_by(|&(i, si), &(j, sj)| by_score_then_id((si, &records[i].id), (sj, &records[j].id)));
    scored.truncate(options.top_k);
    Ok(scored
        .into_iter()
        .map(|(i, score)| QueryResult {
            record: records[i].clone(),
            score,
        })
        .collect())
}
