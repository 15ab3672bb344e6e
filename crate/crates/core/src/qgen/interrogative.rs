use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::QgenError;
use crate::ner::EntityType;

/// Where the interrogative goes in the question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// The interrogative takes the entity's place.
    Replace,
    /// The entity is deleted and the interrogative opens the question.
    Front,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interrogative {
    pub surface: String,
    pub placement: Placement,
}

impl Interrogative {
    fn new(surface: &str, placement: Placement) -> Self {
        Interrogative {
            surface: surface.to_string(),
            placement,
        }
    }
}

/// Entity type to interrogative lookup; always covers all six types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterrogativeMap {
    entries: BTreeMap<EntityType, Interrogative>,
}

impl Default for InterrogativeMap {
    /// Category uses `什么产品类别`, the wording of the flange example.
    fn default() -> Self {
        let mut map = Self::table_wording();
        map.entries.insert(
            EntityType::Cat,
            Interrogative::new("什么产品类别", Placement::Replace),
        );
        map
    }
}

impl InterrogativeMap {
    /// The tabulated wording, where category is `什么类别`.
    pub fn table_wording() -> Self {
        use EntityType::*;
        use Placement::*;
        let entries = [
            (Pro, Interrogative::new("什么属性", Replace)),
            (Con, Interrogative::new("什么工况", Front)),
            (Cat, Interrogative::new("什么类别", Replace)),
            (Mat, Interrogative::new("什么材料", Replace)),
            (Sta, Interrogative::new("什么阶段", Replace)),
            (Par, Interrogative::new("什么参数", Front)),
        ]
        .into_iter()
        .collect();
        InterrogativeMap { entries }
    }

    /// Applies overrides from a JSON object keyed by type abbreviation, e.g.
    /// `{"CAT": {"surface": "什么类别", "placement": "replace"}}`, on top of
    /// the defaults.
    pub fn from_json(json: &str) -> Result<Self, QgenError> {
        let overrides: BTreeMap<String, Interrogative> = serde_json::from_str(json)?;
        let mut map = Self::default();
        for (key, entry) in overrides {
            let ty: EntityType = key
                .parse()
                .map_err(|_| QgenError::UnmappedType(key.clone()))?;
            if entry.surface.trim().is_empty() {
                return Err(QgenError::Map(format!("empty surface for {key}")));
            }
            map.entries.insert(ty, entry);
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, QgenError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, ty: EntityType) -> &Interrogative {
        &self.entries[&ty]
    }

    /// Looks up a type by its abbreviation (`"MAT"`, `"CON"`, ...).
    pub fn interrogative_for(&self, ty: &str) -> Result<&Interrogative, QgenError> {
        let parsed: EntityType = ty
            .parse()
            .map_err(|_| QgenError::UnmappedType(ty.to_string()))?;
        Ok(self.get(parsed))
    }

    pub fn entries(&self) -> impl Iterator<Item = (EntityType, &Interrogative)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_all_types() {
        let map = InterrogativeMap::default();
        assert_eq!(map.entries().count(), 6);
        assert_eq!(
            map.interrogative_for("MAT").unwrap(),
            &Interrogative::new("什么材料", Placement::Replace)
        );
        assert_eq!(
            map.interrogative_for("CON").unwrap(),
            &Interrogative::new("什么工况", Placement::Front)
        );
        assert_eq!(
            map.interrogative_for("PAR").unwrap().placement,
            Placement::Front
        );
        assert_eq!(
            map.interrogative_for("CAT").unwrap().surface,
            "什么产品类别"
        );
        assert_eq!(
            InterrogativeMap::table_wording()
                .get(EntityType::Cat)
                .surface,
            "什么类别"
        );
    }

    #[test]
    fn unknown_type_is_unmapped() {
        let map = InterrogativeMap::default();
        assert!(
            matches!(map.interrogative_for("XYZ"), Err(QgenError::UnmappedType(t)) if t == "XYZ")
        );
    }

    #[test]
    fn lookup_is_pure() {
        let map = InterrogativeMap::default();
        for ty in EntityType::ALL {
            assert_eq!(map.get(ty), map.get(ty));
            assert_eq!(map.interrogative_for(ty.abbrev()).unwrap(), map.get(ty));
        }
    }

    #[test]
    fn overrides_merge_onto_defaults() {
        let map = InterrogativeMap::from_json(
            r#"{"CAT": {"surface": "什么类别", "placement": "replace"}}"#,
        )
        .unwrap();
        assert_eq!(map.get(EntityType::Cat).surface, "什么类别");
        assert_eq!(map.get(EntityType::Mat).surface, "什么材料");
        assert!(
            InterrogativeMap::from_json(r#"{"XYZ": {"surface": "a", "placement": "front"}}"#)
                .is_err()
        );
        assert!(
            InterrogativeMap::from_json(r#"{"MAT": {"surface": " ", "placement": "front"}}"#)
                .is_err()
        );
        assert!(
            InterrogativeMap::from_json(r#"{"MAT": {"surface": "a", "placement": "middle"}}"#)
                .is_err()
        );
    }
}
