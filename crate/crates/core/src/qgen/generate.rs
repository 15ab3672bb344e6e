use serde::{Deserialize, Serialize};

use super::{InterrogativeMap, Placement, QgenError};
use crate::kb::{Origin, SourceRef};
use crate::ner::{extract_entities, EntitySpan, EntityType, NerPipeline, TaggedSentence};

/// Token range `start..end` of the answer inside the source sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

/// A question built from one entity, with the entity as its answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedPair {
    pub question: String,
    pub answer: String,
    pub source_sentence: String,
    pub entity_type: EntityType,
    pub span: TokenSpan,
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceRef>,
}

/// Strips trailing `。`, `？` and `?` (and whitespace) and appends one `?`.
pub fn normalize_question(text: &str) -> String {
    let trimmed =
        text.trim_end_matches(|c: char| c.is_whitespace() || matches!(c, '。' | '？' | '?'));
    format!("{trimmed}?")
}

/// Keeps the sentences with at least one entity, each paired with all of
/// its spans.
pub fn select_candidates(corpus: &[TaggedSentence]) -> Vec<(TaggedSentence, Vec<EntitySpan>)> {
    corpus
        .iter()
        .filter_map(|s| {
            let spans = extract_entities(s);
            (!spans.is_empty()).then(|| (s.clone(), spans))
        })
        .collect()
}

/// One pair per span. Other entities stay verbatim in each question.
pub fn generate_pairs(
    sentence: &TaggedSentence,
    spans: &[EntitySpan],
    map: &InterrogativeMap,
) -> Result<Vec<GeneratedPair>, QgenError> {
    let tokens = &sentence.tokens;
    let source_sentence = sentence.text();
    spans
        .iter()
        .map(|span| {
            if span.start >= span.end || span.end > tokens.len() {
                return Err(QgenError::InvalidSpan {
                    start: span.start,
                    end: span.end,
                    len: tokens.len(),
                });
            }
            let wh = map.get(span.entity_type);
            let before = tokens[..span.start].concat();
            let after = tokens[span.end..].concat();
            let body = match wh.placement {
                Placement::Replace => format!("{before}{}{after}", wh.surface),
                Placement::Front => format!("{}{before}{after}", wh.surface),
            };
            Ok(GeneratedPair {
                question: normalize_question(&body),
                answer: tokens[span.start..span.end].concat(),
                source_sentence: source_sentence.clone(),
                entity_type: span.entity_type,
                span: TokenSpan {
                    start: span.start,
                    end: span.end,
                },
                origin: Origin::Generated,
                source: None,
            })
        })
        .collect()
}

/// One sentence of a raw corpus with its optional location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusLine {
    pub text: String,
    pub source: Option<SourceRef>,
}

/// Parses a plain-text corpus: one sentence per line, optionally prefixed by
/// `section<TAB>`. `doc` fills the document name of every source.
pub fn parse_corpus(text: &str, doc: Option<&str>) -> Vec<CorpusLine> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| match line.split_once('\t') {
            Some((section, sentence)) => CorpusLine {
                text: sentence.trim().to_string(),
                source: Some(SourceRef {
                    doc: doc.unwrap_or_default().to_string(),
                    section: section.trim().to_string(),
                }),
            },
            None => CorpusLine {
                text: line.trim().to_string(),
                source: doc.map(|d| SourceRef {
                    doc: d.to_string(),
                    section: String::new(),
                }),
            },
        })
        .collect()
}

/// Entities found in one corpus sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub sentence: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceRef>,
    pub spans: Vec<EntitySpan>,
}

/// Tags, selects and generates over a raw corpus. Sentences the tagger
/// rejects are skipped with a warning.
pub fn generate_corpus_with_entities(
    corpus: &[CorpusLine],
    tagger: &NerPipeline,
    map: &InterrogativeMap,
) -> Result<(Vec<GeneratedPair>, Vec<EntityRecord>), QgenError> {
    let mut pairs = Vec::new();
    let mut entities = Vec::new();
    for line in corpus {
        let tagged = match tagger.tag_text(&line.text) {
            Ok(t) => t,
            Err(e) => {
                tracing::warn!(sentence = %line.text, error = %e, "skipping sentence");
                continue;
            }
        };
        for (sentence, spans) in select_candidates(std::slice::from_ref(&tagged)) {
            for mut pair in generate_pairs(&sentence, &spans, map)? {
                pair.source.clone_from(&line.source);
                pairs.push(pair);
            }
            entities.push(EntityRecord {
                sentence: sentence.text(),
                source: line.source.clone(),
                spans,
            });
        }
    }
    Ok((pairs, entities))
}

pub fn generate_corpus(
    corpus: &[CorpusLine],
    tagger: &NerPipeline,
    map: &InterrogativeMap,
) -> Result<Vec<GeneratedPair>, QgenError> {
    Ok(generate_corpus_with_entities(corpus, tagger, map)?.0)
}
