use std::path::Path;

use serde_json::json;

use crate::nn::checkpoint::Checkpoint;
use crate::text::{build_vocab, Vocabulary};

use super::{
    train_ner, NerError, NerExample, NerHistory, NerModel, NerModelConfig, NerTrainOptions, TagSet,
    TaggedSentence, TransitionMask,
};

/// A trained tagger with its vocabulary and tag set. Decoding applies the
/// BIO transition mask.
#[derive(Debug, Clone, PartialEq)]
pub struct NerPipeline {
    pub model: NerModel,
    pub vocab: Vocabulary,
    pub tags: TagSet,
}

impl NerPipeline {
    /// Builds a vocabulary over the corpus tokens and trains a tagger.
    pub fn train(
        corpus: &[TaggedSentence],
        embed_dim: usize,
        hidden: usize,
        seed: u64,
        options: &NerTrainOptions,
    ) -> Result<(Self, NerHistory), NerError> {
        let tokens: Vec<Vec<String>> = corpus.iter().map(|s| s.tokens.clone()).collect();
        let vocab = build_vocab(&tokens, 1);
        let tags = TagSet::standard();
        let examples = encode_corpus(corpus, &vocab, &tags)?;
        let config = NerModelConfig {
            seed,
            ..NerModelConfig::new(vocab.len(), embed_dim, hidden, tags.len())
        };
        let (model, history) = train_ner(&examples, &config, options)?;
        Ok((NerPipeline { model, vocab, tags }, history))
    }

    pub fn examples(&self, corpus: &[TaggedSentence]) -> Result<Vec<NerExample>, NerError> {
        encode_corpus(corpus, &self.vocab, &self.tags)
    }

    pub fn mask(&self) -> TransitionMask {
        TransitionMask::bio(&self.tags)
    }

    /// Tags a token sequence; an empty sequence yields an empty sentence.
    pub fn tag_tokens(&self, tokens: &[String]) -> Result<TaggedSentence, NerError> {
        if tokens.is_empty() {
            return TaggedSentence::new(Vec::new(), Vec::new());
        }
        let ids: Vec<usize> = tokens.iter().map(|t| self.vocab.id(t)).collect();
        let path = self.model.decode(&ids, Some(&self.mask()))?;
        TaggedSentence::new(tokens.to_vec(), self.tags.decode(&path)?)
    }

    /// Tags raw text at character level.
    pub fn tag_text(&self, text: &str) -> Result<TaggedSentence, NerError> {
        self.tag_tokens(&TaggedSentence::untagged_chars(text).tokens)
    }

    /// Token accuracy of masked decoding against gold tags.
    pub fn token_accuracy(&self, corpus: &[TaggedSentence]) -> Result<f64, NerError> {
        super::token_accuracy(&self.model, &self.examples(corpus)?, Some(&self.mask()))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        self.model.to_checkpoint(json!({
            "vocab": serde_json::from_str::<serde_json::Value>(&self.vocab.to_json()).expect("vocab json"),
            "tags": self.tags,
        }))
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, NerError> {
        let (model, extra) = NerModel::from_checkpoint(ck)?;
        let vocab = Vocabulary::from_json(&extra["vocab"].to_string())?;
        let tags: TagSet = serde_json::from_value(extra["tags"].clone())
            .map_err(|e| NerError::Config(format!("checkpoint tag set: {e}")))?;
        if vocab.len() != model.config.vocab_size || tags.len() != model.config.num_tags {
            return Err(NerError::Config(format!(
                "checkpoint has {} tokens and {} tags, model expects {} and {}",
                vocab.len(),
                tags.len(),
                model.config.vocab_size,
                model.config.num_tags
            )));
        }
        Ok(NerPipeline { model, vocab, tags })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NerError> {
        Ok(self.to_checkpoint().save(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NerError> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

fn encode_corpus(
    corpus: &[TaggedSentence],
    vocab: &Vocabulary,
    tags: &TagSet,
) -> Result<Vec<NerExample>, NerError> {
    corpus
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| {
            Ok(NerExample {
                ids: s.tokens.iter().map(|t| vocab.id(t)).collect(),
                tags: tags.encode(&s.tags)?,
            })
        })
        .collect()
}
