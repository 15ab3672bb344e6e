//! Tokenization, vocabulary construction and integer encoding.

mod segment;
mod vocab;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use segment::{segment, SegmenterConfig};
pub use vocab::{build_vocab, Vocabulary, PAD, PAD_TOKEN, UNK, UNK_TOKEN};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid vocabulary file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("token/id length mismatch ({tokens} tokens, {ids} ids)")]
    LengthMismatch { tokens: usize, ids: usize },
    #[error("id {id} out of range for vocabulary of size {size}")]
    IdOutOfRange { id: usize, size: usize },
}

/// A segmented sentence together with its vocabulary ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedSentence {
    tokens: Vec<String>,
    ids: Vec<usize>,
}

impl TokenizedSentence {
    pub fn new(
        tokens: Vec<String>,
        ids: Vec<usize>,
        vocab: &Vocabulary,
    ) -> Result<Self, TextError> {
        if tokens.len() != ids.len() {
            return Err(TextError::LengthMismatch {
                tokens: tokens.len(),
                ids: ids.len(),
            });
        }
        if let Some(&id) = ids.iter().find(|&&id| id >= vocab.len()) {
            return Err(TextError::IdOutOfRange {
                id,
                size: vocab.len(),
            });
        }
        Ok(TokenizedSentence { tokens, ids })
    }

    /// Looks every token up in `vocab`.
    pub fn from_tokens<S: Into<String>>(
        tokens: impl IntoIterator<Item = S>,
        vocab: &Vocabulary,
    ) -> Self {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let ids = tokens.iter().map(|t| vocab.id(t)).collect();
        TokenizedSentence { tokens, ids }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Keeps at most the first `max_len` tokens.
    pub fn truncated(&self, max_len: usize) -> Self {
        let n = self.len().min(max_len);
        TokenizedSentence {
            tokens: self.tokens[..n].to_vec(),
            ids: self.ids[..n].to_vec(),
        }
    }
}

/// Fixed-width id sequence plus the number of real (non-padding) positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedIds {
    pub ids: Vec<usize>,
    pub len: usize,
}

/// Maps tokens to ids, right-padding with `PAD` or truncating to `max_len`.
pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, max_len: usize) -> EncodedIds {
    let max_len = max_len.max(1);
    let len = tokens.len().min(max_len);
    let mut ids: Vec<usize> = tokens[..len].iter().map(|t| vocab.id(t.as_ref())).collect();
    ids.resize(max_len, PAD);
    EncodedIds { ids, len }
}

/// Inverse of [`encode`] over the unpadded prefix.
pub fn decode(encoded: &EncodedIds, vocab: &Vocabulary) -> Vec<String> {
    encoded.ids[..encoded.len]
        .iter()
        .map(|&id| vocab.token(id).unwrap_or(UNK_TOKEN).to_string())
        .collect()
}

/// Segmenter, vocabulary and length limit bundled for turning raw text into
/// model input.
#[derive(Debug, Clone, PartialEq)]
pub struct TextEncoder {
    pub segmenter: SegmenterConfig,
    pub vocab: Vocabulary,
    pub max_len: usize,
}

impl TextEncoder {
    pub fn tokenize(&self, text: &str) -> TokenizedSentence {
        TokenizedSentence::from_tokens(segment(text, &self.segmenter), &self.vocab)
            .truncated(self.max_len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vocab() -> Vocabulary {
        build_vocab(&[vec!["a", "b"], vec!["b", "c"]], 1)
    }

    #[test]
    fn pads_short_sequences() {
        let v = vocab();
        let e = encode(&["b"], &v, 3);
        assert_eq!(e.ids, vec![v.id("b"), PAD, PAD]);
        assert_eq!(e.len, 1);
    }

    #[test]
    fn unknown_token() {
        let e = encode(&["z"], &vocab(), 1);
        assert_eq!(e.ids, vec![UNK]);
        assert_eq!(e.len, 1);
    }

    #[test]
    fn truncates_long_sequences() {
        let v = vocab();
        let e = encode(&["a", "b", "c", "a", "b"], &v, 3);
        assert_eq!(e.ids, vec![v.id("a"), v.id("b"), v.id("c")]);
        assert_eq!(e.len, 3);
    }

    #[test]
    fn sentence_invariants_are_checked() {
        let v = vocab();
        assert!(TokenizedSentence::new(vec!["a".into()], vec![], &v).is_err());
        assert!(TokenizedSentence::new(vec!["a".into()], vec![99], &v).is_err());
        assert!(TokenizedSentence::new(vec!["a".into()], vec![3], &v).is_ok());
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(tokens in prop::collection::vec("[a-e]", 1..8)) {
            let v = build_vocab(&[vec!["a", "b", "c"]], 1);
            let e = encode(&tokens, &v, 16);
            let expected: Vec<String> = tokens
                .iter()
                .map(|t| if v.contains(t) { t.clone() } else { UNK_TOKEN.to_string() })
                .collect();
            prop_assert_eq!(decode(&e, &v), expected);
        }

        #[test]
        fn char_mode_is_lossless(s in "\\PC{0,24}") {
            let joined: String = segment(&s, &SegmenterConfig::Char).concat();
            let stripped: String = s.chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(joined, stripped);
        }

        #[test]
        fn build_vocab_is_deterministic(corpus in prop::collection::vec(prop::collection::vec("[a-f]{1,2}", 0..6), 0..6)) {
            let a = build_vocab(&corpus, 1);
            let b = build_vocab(&corpus, 1);
            prop_assert_eq!(a.content_tokens(), b.content_tokens());
        }
    }
}
