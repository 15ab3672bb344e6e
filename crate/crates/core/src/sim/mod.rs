//! Interactive-attention BiLSTM sentence-pair similarity.
//!
//! Both questions go through one shared embedding table and BiLSTM. Each
//! word then attends over the other question's encoded words (dot-product
//! scores, softmax-normalized per row for the first sentence and per column
//! for the second). A sentence vector is the mean-pooled BiLSTM states
//! concatenated with the mean-pooled attended states, and the pair score is
//! `(1 + cosine) / 2`. Disabling attention leaves the plain siamese BiLSTM.

mod attention;
mod data;
mod model;
mod pipeline;
mod pooling;
mod train;

use thiserror::Error;

pub use attention::{cross_attention, cross_attention_backward, AttentionMatrix, CrossAttention};
pub use data::{read_pairs, PairRecord};
pub use model::{cosine, EncodedSentence, SimGrads, SimModel, SimModelConfig, Similarity};
pub use pipeline::SimPipeline;
pub use pooling::{pool, pool_backward, sentence_repr, Pooling};
pub use train::{
    accuracy_from_scores, eval_accuracy, score_pairs, split_train_val, train_sim, EpochStats,
    PairExample, TrainHistory, TrainOptions,
};

use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Text(#[from] crate::text::TextError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
