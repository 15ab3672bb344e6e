//! Standards question answering: question–answer pair generation from tagged
//! sentences, a BiLSTM-CRF entity tagger, an interactive-attention BiLSTM
//! similarity model, and a knowledge library with similarity retrieval.

pub mod fixtures;
pub mod kb;
pub mod ner;
pub mod nn;
pub mod qgen;
pub mod service;
pub mod sim;
pub mod text;
