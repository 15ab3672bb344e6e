use serde::{Deserialize, Serialize};

use super::{EntityType, NerError, Tag};

/// A token sequence with one BIO tag per token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSentence {
    #[serde(rename = "text")]
    pub tokens: Vec<String>,
    pub tags: Vec<Tag>,
}

impl TaggedSentence {
    pub fn new(tokens: Vec<String>, tags: Vec<Tag>) -> Result<Self, NerError> {
        if tokens.len() != tags.len() {
            return Err(NerError::LengthMismatch {
                tokens: tokens.len(),
                tags: tags.len(),
            });
        }
        Ok(TaggedSentence { tokens, tags })
    }

    /// Character tokens of `text` (whitespace dropped), all tagged `O`.
    pub fn untagged_chars(text: &str) -> Self {
        let tokens: Vec<String> = text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect();
        let tags = vec![Tag::O; tokens.len()];
        TaggedSentence { tokens, tags }
    }

    /// Character tokens of `text` with every listed entity surface tagged at
    /// its first unclaimed occurrence.
    pub fn annotate(text: &str, entities: &[(&str, EntityType)]) -> Result<Self, NerError> {
        let mut s = Self::untagged_chars(text);
        for &(surface, ty) in entities {
            let needle: Vec<String> = surface
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(String::from)
                .collect();
            if needle.is_empty() {
                return Err(NerError::Config("empty entity surface".into()));
            }
            let not_found =
                || NerError::Config(format!("entity {surface:?} not found in {text:?}"));
            if needle.len() > s.tokens.len() {
                return Err(not_found());
            }
            let start = (0..=s.tokens.len() - needle.len())
                .find(|&i| {
                    s.tokens[i..i + needle.len()] == needle[..]
                        && s.tags[i..i + needle.len()].iter().all(|&t| t == Tag::O)
                })
                .ok_or_else(not_found)?;
            s.tags[start] = Tag::B(ty);
            for t in &mut s.tags[start + 1..start + needle.len()] {
                *t = Tag::I(ty);
            }
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Concatenated tokens.
    pub fn text(&self) -> String {
        self.tokens.concat()
    }
}

/// A typed entity occupying tokens `start..end`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub entity_type: EntityType,
    pub surface: String,
}

/// Replaces every dangling `I-X` (not preceded by `B-X` or `I-X`) with `B-X`.
pub fn repair_tags(tags: &[Tag]) -> Vec<Tag> {
    let mut out = Vec::with_capacity(tags.len());
    let mut prev: Option<EntityType> = None;
    for &tag in tags {
        let fixed = match tag {
            Tag::I(t) if prev != Some(t) => Tag::B(t),
            other => other,
        };
        prev = fixed.entity();
        out.push(fixed);
    }
    out
}

/// Groups `B-X (I-X)*` runs into spans after repairing dangling `I-X` tags.
pub fn extract_entities(sentence: &TaggedSentence) -> Vec<EntitySpan> {
    let tags = repair_tags(&sentence.tags);
    let mut spans = Vec::new();
    let mut open: Option<(usize, EntityType)> = None;
    let mut close = |open: &mut Option<(usize, EntityType)>, end: usize| {
        if let Some((start, entity_type)) = open.take() {
            spans.push(EntitySpan {
                start,
                end,
                entity_type,
                surface: sentence.tokens[start..end].concat(),
            });
        }
    };
    for (i, &tag) in tags.iter().enumerate() {
        match tag {
            Tag::O => close(&mut open, i),
            Tag::B(t) => {
                close(&mut open, i);
                open = Some((i, t));
            }
            Tag::I(_) => {}
        }
    }
    close(&mut open, tags.len());
    spans
}

/// Renders spans back to BIO tags over a sentence of length `len`.
pub fn spans_to_tags(len: usize, spans: &[EntitySpan]) -> Result<Vec<Tag>, NerError> {
    let mut tags = vec![Tag::O; len];
    for s in spans {
        if s.start >= s.end || s.end > len {
            return Err(NerError::Config(format!(
                "span {}..{} invalid for length {len}",
                s.start, s.end
            )));
        }
        if tags[s.start..s.end].iter().any(|&t| t != Tag::O) {
            return Err(NerError::Config(format!(
                "span {}..{} overlaps another span",
                s.start, s.end
            )));
        }
        tags[s.start] = Tag::B(s.entity_type);
        for t in &mut tags[s.start + 1..s.end] {
            *t = Tag::I(s.entity_type);
        }
    }
    Ok(tags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sentence(tags: &[&str]) -> TaggedSentence {
        let tokens = (0..tags.len()).map(|i| format!("w{i}")).collect();
        TaggedSentence::new(tokens, tags.iter().map(|t| t.parse().unwrap()).collect()).unwrap()
    }

    #[test]
    fn table_two_labels_give_one_cat_span() {
        let text = "本规定不适用于对焊法兰的颈部过渡段";
        let mut s = TaggedSentence::untagged_chars(text);
        s.tags[7] = Tag::B(EntityType::Cat);
        s.tags[8] = Tag::I(EntityType::Cat);
        let spans = extract_entities(&s);
        assert_eq!(
            spans,
            vec![EntitySpan {
                start: 7,
                end: 9,
                entity_type: EntityType::Cat,
                surface: "对焊".into()
            }]
        );
    }

    #[test]
    fn all_outside_has_no_spans() {
        assert!(extract_entities(&sentence(&["O", "O", "O"])).is_empty());
        assert!(extract_entities(&sentence(&[])).is_empty());
    }

    #[test]
    fn dangling_inside_opens_a_span() {
        let spans = extract_entities(&sentence(&["I-MAT", "I-MAT", "O"]));
        assert_eq!(spans.len(), 1);
        assert_eq!(
            (spans[0].start, spans[0].end, spans[0].entity_type),
            (0, 2, EntityType::Mat)
        );
        let spans = extract_entities(&sentence(&["B-CAT", "I-MAT", "I-MAT"]));
        assert_eq!(spans.len(), 2);
        assert_eq!(
            (spans[1].start, spans[1].end, spans[1].entity_type),
            (1, 3, EntityType::Mat)
        );
    }

    #[test]
    fn adjacent_begins_split_spans() {
        let spans = extract_entities(&sentence(&["B-PAR", "B-PAR", "I-PAR"]));
        assert_eq!(
            spans.iter().map(|s| (s.start, s.end)).collect::<Vec<_>>(),
            vec![(0, 1), (1, 3)]
        );
    }

    #[test]
    fn annotate_tags_first_free_occurrence() {
        let s =
            TaggedSentence::annotate("设计压力取1MPa。", &[("设计压力", EntityType::Par)]).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(s.tags[0], Tag::B(EntityType::Par));
        assert_eq!(s.tags[3], Tag::I(EntityType::Par));
        assert_eq!(s.tags[4], Tag::O);
        assert!(TaggedSentence::annotate("abc", &[("x", EntityType::Par)]).is_err());
        assert!(TaggedSentence::annotate("ab", &[("abc", EntityType::Par)]).is_err());
    }

    #[test]
    fn spans_to_tags_rejects_bad_spans() {
        let span = |start, end| EntitySpan {
            start,
            end,
            entity_type: EntityType::Con,
            surface: String::new(),
        };
        assert!(spans_to_tags(3, &[span(2, 4)]).is_err());
        assert!(spans_to_tags(3, &[span(1, 1)]).is_err());
        assert!(spans_to_tags(3, &[span(0, 2), span(1, 3)]).is_err());
    }

    #[test]
    fn json_line_shape() {
        let s = sentence(&["B-CAT", "O"]);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"text":["w0","w1"],"tags":["B-CAT","O"]}"#);
    }

    fn any_tag() -> impl Strategy<Value = Tag> {
        (0usize..13).prop_map(|i| super::super::TagSet::standard().tag(i).unwrap())
    }

    proptest! {
        #[test]
        fn render_after_extract_gives_repaired_tags(tags in proptest::collection::vec(any_tag(), 0..12)) {
            let tokens: Vec<String> = (0..tags.len()).map(|i| format!("{i}")).collect();
            let s = TaggedSentence::new(tokens, tags.clone()).unwrap();
            let spans = extract_entities(&s);
            prop_assert_eq!(spans_to_tags(s.len(), &spans).unwrap(), repair_tags(&tags));
            for span in &spans {
                prop_assert!(span.start < span.end && span.end <= s.len());
                prop_assert_eq!(&span.surface, &s.tokens[span.start..span.end].concat());
            }
        }

        #[test]
        fn repair_is_idempotent(tags in proptest::collection::vec(any_tag(), 0..12)) {
            let once = repair_tags(&tags);
            prop_assert_eq!(repair_tags(&once), once);
        }
    }
}
