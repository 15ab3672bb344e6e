use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;

/// One line of a pair dataset file: `{"q1": "...", "q2": "...", "label": 0|1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub q1: String,
    pub q2: String,
    pub label: u8,
}

/// Reads a JSON Lines pair file. Blank lines are skipped.
pub fn read_pairs(path: impl AsRef<Path>) -> Result<Vec<PairRecord>, SimError> {
    parse_pairs(&fs::read_to_string(path)?)
}

pub(crate) fn parse_pairs(text: &str) -> Result<Vec<PairRecord>, SimError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: PairRecord = serde_json::from_str(line).map_err(|e| SimError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if record.label > 1 {
            return Err(SimError::Parse {
                line: i + 1,
                message: format!("label must be 0 or 1, got {}", record.label),
            });
        }
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines() {
        let text =
            "{\"q1\":\"a\",\"q2\":\"b\",\"label\":1}\n\n{\"q1\":\"c\",\"q2\":\"d\",\"label\":0}\n";
        let pairs = parse_pairs(text).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[1].q1, "c");
    }

    #[test]
    fn reports_line_numbers() {
        let text = "{\"q1\":\"a\",\"q2\":\"b\",\"label\":1}\n{oops}\n";
        assert!(matches!(
            parse_pairs(text),
            Err(SimError::Parse { line: 2, .. })
        ));
        let text = "{\"q1\":\"a\",\"q2\":\"b\",\"label\":3}\n";
        assert!(matches!(
            parse_pairs(text),
            Err(SimError::Parse { line: 1, .. })
        ));
    }
}
