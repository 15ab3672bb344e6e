use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::NerError;

/// The six entity categories of the manufacturing-standards domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityType {
    /// Property, e.g. a geometric dimension.
    Pro,
    /// Working condition, e.g. a corrosive environment.
    Con,
    /// Product category, e.g. evaporator or reactor.
    Cat,
    /// Material.
    Mat,
    /// Production stage, e.g. failure analysis.
    Sta,
    /// Computable parameter, e.g. length or density.
    Par,
}

impl EntityType {
    pub const ALL: [EntityType; 6] = [
        EntityType::Pro,
        EntityType::Con,
        EntityType::Cat,
        EntityType::Mat,
        EntityType::Sta,
        EntityType::Par,
    ];

    pub fn abbrev(self) -> &'static str {
        match self {
            EntityType::Pro => "PRO",
            EntityType::Con => "CON",
            EntityType::Cat => "CAT",
            EntityType::Mat => "MAT",
            EntityType::Sta => "STA",
            EntityType::Par => "PAR",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbrev())
    }
}

impl FromStr for EntityType {
    type Err = NerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityType::ALL
            .into_iter()
            .find(|t| t.abbrev() == s)
            .ok_or_else(|| NerError::UnknownEntityType(s.to_string()))
    }
}

impl Serialize for EntityType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.abbrev())
    }
}

impl<'de> Deserialize<'de> for EntityType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A BIO tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    O,
    B(EntityType),
    I(EntityType),
}

impl Tag {
    pub fn entity(self) -> Option<EntityType> {
        match self {
            Tag::O => None,
            Tag::B(t) | Tag::I(t) => Some(t),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(t) => write!(f, "B-{t}"),
            Tag::I(t) => write!(f, "I-{t}"),
        }
    }
}

impl FromStr for Tag {
    type Err = NerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(Tag::O);
        }
        let unknown = || NerError::UnknownTag(s.to_string());
        let (prefix, ty) = s.split_once('-').ok_or_else(unknown)?;
        let ty: EntityType = ty.parse().map_err(|_| unknown())?;
        match prefix {
            "B" => Ok(Tag::B(ty)),
            "I" => Ok(Tag::I(ty)),
            _ => Err(unknown()),
        }
    }
}

impl Serialize for Tag {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An ordered set of tags; the position of a tag is its index in emission
/// and transition matrices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSet {
    tags: Vec<Tag>,
}

impl TagSet {
    /// `O` followed by `B-X, I-X` for every entity type: 13 tags.
    pub fn standard() -> Self {
        let mut tags = vec![Tag::O];
        for t in EntityType::ALL {
            tags.push(Tag::B(t));
            tags.push(Tag::I(t));
        }
        TagSet { tags }
    }

    /// A custom tag set; must contain `O` exactly once and no duplicates.
    pub fn new(tags: Vec<Tag>) -> Result<Self, NerError> {
        if tags.iter().filter(|&&t| t == Tag::O).count() != 1 {
            return Err(NerError::Config(
                "tag set must contain O exactly once".into(),
            ));
        }
        for (i, t) in tags.iter().enumerate() {
            if tags[..i].contains(t) {
                return Err(NerError::Config(format!("duplicate tag {t}")));
            }
        }
        Ok(TagSet { tags })
    }

    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self, NerError> {
        Self::new(
            labels
                .iter()
                .map(|s| s.as_ref().parse())
                .collect::<Result<_, _>>()?,
        )
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn tag(&self, index: usize) -> Option<Tag> {
        self.tags.get(index).copied()
    }

    pub fn index(&self, tag: Tag) -> Result<usize, NerError> {
        self.tags
            .iter()
            .position(|&t| t == tag)
            .ok_or_else(|| NerError::UnknownTag(tag.to_string()))
    }

    pub fn encode(&self, tags: &[Tag]) -> Result<Vec<usize>, NerError> {
        tags.iter().map(|&t| self.index(t)).collect()
    }

    pub fn decode(&self, indices: &[usize]) -> Result<Vec<Tag>, NerError> {
        indices
            .iter()
            .map(|&i| {
                self.tag(i).ok_or(NerError::Index {
                    what: "tag",
                    index: i,
                    size: self.len(),
                })
            })
            .collect()
    }
}

impl Default for TagSet {
    fn default() -> Self {
        Self::standard()
    }
}
