//! BiLSTM-CRF entity tagger over character tokens.
//!
//! A trainable embedding table feeds a BiLSTM whose states are projected to
//! per-tag emission scores; a linear-chain CRF adds transition scores and is
//! trained on the exact negative log-likelihood. Decoding is Viterbi with
//! BIO transition constraints.

mod crf;
mod data;
mod model;
mod pipeline;
mod spans;
mod tags;
mod train;

use thiserror::Error;

pub use crf::{
    crf_gold_score, crf_log_partition, crf_nll_grad, viterbi_decode, CrfGrad, CrfParams,
    TransitionMask,
};
pub use data::{parse_tagged, read_tagged, to_jsonl};
pub use model::{NerGrads, NerModel, NerModelConfig};
pub use pipeline::NerPipeline;
pub use spans::{extract_entities, repair_tags, spans_to_tags, EntitySpan, TaggedSentence};
pub use tags::{EntityType, Tag, TagSet};
pub use train::{
    token_accuracy, train_ner, NerEpochStats, NerExample, NerHistory, NerTrainOptions,
};

use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum NerError {
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
    #[error("unknown entity type {0:?}")]
    UnknownEntityType(String),
    #[error("{tokens} tokens but {tags} tags")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("{what} index {index} out of range for size {size}")]
    Index {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("empty sentence")]
    EmptySentence,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("every tag path is masked out")]
    Infeasible,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Text(#[from] crate::text::TextError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
