use std::fs;
use std::path::Path;

use super::{NerError, TaggedSentence};

/// Reads a JSON Lines file of `{"text": [tokens], "tags": [BIO strings]}`.
pub fn read_tagged(path: impl AsRef<Path>) -> Result<Vec<TaggedSentence>, NerError> {
    parse_tagged(&fs::read_to_string(path)?)
}

pub fn parse_tagged(text: &str) -> Result<Vec<TaggedSentence>, NerError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| NerError::Parse {
            line: i + 1,
            message,
        };
        let s: TaggedSentence = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        if s.tokens.len() != s.tags.len() {
            return Err(parse_err(format!(
                "{} tokens but {} tags",
                s.tokens.len(),
                s.tags.len()
            )));
        }
        out.push(s);
    }
    Ok(out)
}

/// Serializes sentences as JSON Lines.
pub fn to_jsonl(sentences: &[TaggedSentence]) -> String {
    sentences
        .iter()
        .map(|s| serde_json::to_string(s).expect("tagged sentence serializes") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ner::{EntityType, Tag};

    #[test]
    fn parse_and_render_round_trip() {
        let s =
            TaggedSentence::annotate("设计压力取1MPa。", &[("设计压力", EntityType::Par)]).unwrap();
        let text = to_jsonl(&[s.clone(), s.clone()]);
        assert_eq!(parse_tagged(&text).unwrap(), vec![s.clone(), s]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let good = r#"{"text":["a"],"tags":["O"]}"#;
        let bad_tag = r#"{"text":["a"],"tags":["B-XYZ"]}"#;
        let short = r#"{"text":["a","b"],"tags":["O"]}"#;
        assert!(matches!(
            parse_tagged(&format!("{good}\n{bad_tag}\n")),
            Err(NerError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_tagged(&format!("{short}\n")),
            Err(NerError::Parse { line: 1, .. })
        ));
        assert_eq!(
            parse_tagged(&format!("\n{good}\n")).unwrap()[0].tags,
            vec![Tag::O]
        );
    }
}
