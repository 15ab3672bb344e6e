use std::path::Path;

use serde_json::json;

use crate::nn::checkpoint::Checkpoint;
use crate::text::{
    build_vocab, segment, SegmenterConfig, TextEncoder, TokenizedSentence, Vocabulary,
};

use super::{PairExample, PairRecord, SimError, SimModel, SimModelConfig, Similarity};

/// A similarity model together with the text encoder it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPipeline {
    pub model: SimModel,
    pub text: TextEncoder,
}

impl SimPipeline {
    /// Builds the text encoder for a pair corpus: segments every question and
    /// keeps tokens seen at least `min_count` times.
    pub fn encoder_for(
        records: &[PairRecord],
        segmenter: SegmenterConfig,
        min_count: usize,
        max_len: usize,
    ) -> TextEncoder {
        let corpus: Vec<Vec<String>> = records
            .iter()
            .flat_map(|r| [segment(&r.q1, &segmenter), segment(&r.q2, &segmenter)])
            .collect();
        TextEncoder {
            vocab: build_vocab(&corpus, min_count),
            segmenter,
            max_len,
        }
    }

    /// Tokenizes pair records, dropping pairs where either side is empty.
    pub fn examples(text: &TextEncoder, records: &[PairRecord]) -> Vec<PairExample> {
        records
            .iter()
            .map(|r| PairExample {
                q1: text.tokenize(&r.q1),
                q2: text.tokenize(&r.q2),
                label: r.label,
            })
            .filter(|p| !p.q1.is_empty() && !p.q2.is_empty())
            .collect()
    }

    pub fn tokenize(&self, text: &str) -> TokenizedSentence {
        self.text.tokenize(text)
    }

    pub fn similarity_text(&self, a: &str, b: &str) -> Result<Similarity, SimError> {
        self.model.similarity(&self.tokenize(a), &self.tokenize(b))
    }

    pub fn config(&self) -> &SimModelConfig {
        &self.model.config
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        self.model.to_checkpoint(json!({
            "vocab": serde_json::from_str::<serde_json::Value>(&self.text.vocab.to_json()).expect("vocab json"),
            "segmenter": self.text.segmenter,
        }))
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, SimError> {
        let (model, extra) = SimModel::from_checkpoint(ck)?;
        let vocab = Vocabulary::from_json(&extra["vocab"].to_string())?;
        if vocab.len() != model.config.vocab_size {
            return Err(SimError::Config(format!(
                "checkpoint vocabulary has {} entries, model expects {}",
                vocab.len(),
                model.config.vocab_size
            )));
        }
        let segmenter: SegmenterConfig = serde_json::from_value(extra["segmenter"].clone())
            .map_err(|e| SimError::Config(format!("checkpoint segmenter: {e}")))?;
        let max_len = model.config.max_len;
        Ok(SimPipeline {
            model,
            text: TextEncoder {
                segmenter,
                vocab,
                max_len,
            },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SimError> {
        Ok(self.to_checkpoint().save(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }

    /// Swaps in an externally supplied vocabulary file; its size must match
    /// the embedding table.
    pub fn with_vocab(mut self, vocab: Vocabulary) -> Result<Self, SimError> {
        if vocab.len() != self.model.config.vocab_size {
            return Err(SimError::Config(format!(
                "vocabulary has {} entries, model expects {}",
                vocab.len(),
                self.model.config.vocab_size
            )));
        }
        self.text.vocab = vocab;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_roundtrip_keeps_text_encoder() {
        let records = vec![PairRecord {
            q1: "标准适用".into(),
            q2: "适用标准".into(),
            label: 1,
        }];
        let text =
            SimPipeline::encoder_for(&records, SegmenterConfig::max_match(["标准", "适用"]), 1, 8);
        let mut config = SimModelConfig::new(text.vocab.len(), 4, 3);
        config.max_len = 8;
        let p = SimPipeline {
            model: SimModel::new(config).unwrap(),
            text,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sim.ckpt");
        p.save(&path).unwrap();
        let back = SimPipeline::load(&path).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.tokenize("标准适用").tokens(), &["标准", "适用"]);
    }
}
