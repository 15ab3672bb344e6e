use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// How raw text is split into tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SegmenterConfig {
    /// Every non-whitespace character is a token.
    #[default]
    Char,
    /// Forward maximum matching against a lexicon. Characters not covered by a
    /// lexicon word become single tokens, except runs of ASCII letters and
    /// digits which are kept together.
    MaxMatch { lexicon: BTreeSet<String> },
}

impl SegmenterConfig {
    pub fn max_match<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SegmenterConfig::MaxMatch {
            lexicon: words
                .into_iter()
                .map(Into::into)
                .filter(|w: &String| !w.is_empty())
                .collect(),
        }
    }

    /// Loads a lexicon file (UTF-8, one word per line) into a max-match segmenter.
    pub fn from_lexicon_file(path: impl AsRef<Path>) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(Self::max_match(
            text.lines().map(str::trim).filter(|l| !l.is_empty()),
        ))
    }
}

/// Splits `text` into tokens in source order.
pub fn segment(text: &str, segmenter: &SegmenterConfig) -> Vec<String> {
    match segmenter {
        SegmenterConfig::Char => text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
        SegmenterConfig::MaxMatch { lexicon } => max_match(text, lexicon),
    }
}

fn max_match(text: &str, lexicon: &BTreeSet<String>) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let longest = lexicon.iter().map(|w| w.chars().count()).max().unwrap_or(0);
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let mut end = i + 1;
        let mut matched = false;
        let limit = longest.min(chars.len() - i);
        for len in (2..=limit).rev() {
            let candidate: String = chars[i..i + len].iter().collect();
            if lexicon.contains(&candidate) {
                end = i + len;
                matched = true;
                break;
            }
        }
        if !matched && chars[i].is_ascii_alphanumeric() {
            while end < chars.len() && chars[end].is_ascii_alphanumeric() {
                end += 1;
            }
        }
        tokens.push(chars[i..end].iter().collect());
        i = end;
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_word_question() {
        let seg = SegmenterConfig::max_match(["标准", "适用", "最大", "多少", "压力"]);
        assert_eq!(
            segment("标准适用最大多少压力", &seg),
            vec!["标准", "适用", "最大", "多少", "压力"]
        );
    }

    #[test]
    fn empty_text() {
        assert!(segment("", &SegmenterConfig::Char).is_empty());
        assert!(segment("", &SegmenterConfig::max_match(["a"])).is_empty());
    }

    #[test]
    fn max_match_versus_char_mode() {
        let seg = SegmenterConfig::max_match(["标准", "适用"]);
        assert_eq!(segment("标准适用", &seg), vec!["标准", "适用"]);
        assert_eq!(
            segment("标准适用", &SegmenterConfig::Char),
            vec!["标", "准", "适", "用"]
        );
    }

    #[test]
    fn longest_match_wins() {
        let seg = SegmenterConfig::max_match(["对焊", "对焊法兰", "法兰"]);
        assert_eq!(segment("对焊法兰的", &seg), vec!["对焊法兰", "的"]);
    }

    #[test]
    fn punctuation_and_ascii_runs() {
        let seg = SegmenterConfig::max_match(["设计压力"]);
        assert_eq!(
            segment("设计压力取1MPa。", &seg),
            vec!["设计压力", "取", "1MPa", "。"]
        );
        assert_eq!(
            segment(
                "how do i  learn?",
                &SegmenterConfig::max_match(Vec::<String>::new())
            ),
            vec!["how", "do", "i", "learn", "?"]
        );
        assert_eq!(
            segment("压力?", &SegmenterConfig::Char),
            vec!["压", "力", "?"]
        );
    }

    #[test]
    fn lexicon_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lex.txt");
        fs::write(&path, "标准\n\n适用\n").unwrap();
        let seg = SegmenterConfig::from_lexicon_file(&path).unwrap();
        assert_eq!(segment("标准适用", &seg), vec!["标准", "适用"]);
    }
}
