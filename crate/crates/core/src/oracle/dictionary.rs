use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::masks::normalize_term;

/// Sentence template used when a type does not define its own.
pub const DEFAULT_TEMPLATE: &str = "The {type} of the {object} is {value}";

const BUNDLED: &str = include_str!("../../data/attributes.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeType {
    #[serde(default = "default_template")]
    pub template: String,
    pub values: Vec<String>,
}

fn default_template() -> String {
    DEFAULT_TEMPLATE.to_string()
}

/// Attribute types with their candidate values and sentence templates.
/// Templates use the placeholders `{type}`, `{object}` and `{value}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, AttributeType>", into = "BTreeMap<String, AttributeType>")]
pub struct AttributeDictionary {
    types: BTreeMap<String, AttributeType>,
}

impl TryFrom<BTreeMap<String, AttributeType>> for AttributeDictionary {
    type Error = OracleError;

    fn try_from(raw: BTreeMap<String, AttributeType>) -> Result<Self, OracleError> {
        let mut types = BTreeMap::new();
        for (name, mut t) in raw {
            t.values = t.values.iter().map(|v| normalize_term(v)).collect();
            if t.values.len() < 2 {
                return Err(OracleError::Dictionary(format!("type {name} has fewer than 2 values")));
            }
            if !t.template.contains("{value}") {
                return Err(OracleError::Dictionary(format!("template of {name} lacks {{value}}")));
            }
            types.insert(normalize_term(&name), t);
        }
        Ok(Self { types })
    }
}

impl From<AttributeDictionary> for BTreeMap<String, AttributeType> {
    fn from(d: AttributeDictionary) -> Self {
        d.types
    }
}

impl AttributeDictionary {
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED).expect("bundled attribute dictionary is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, OracleError> {
        serde_json::from_str(text).map_err(|e| OracleError::Dictionary(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, OracleError> {
        let text = std::fs::read_to_string(path).map_err(|e| OracleError::Dictionary(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn types(&self) -> impl Iterator<Item = &str> {
        self.types.keys().map(String::as_str)
    }

    pub fn get(&self, attribute_type: &str) -> Option<&AttributeType> {
        self.types.get(&normalize_term(attribute_type))
    }

    /// First type (in name order) listing `value`.
    pub fn type_of(&self, value: &str) -> Option<&str> {
        let v = normalize_term(value);
        self.types
            .iter()
            .find(|(_, t)| t.values.contains(&v))
            .map(|(k, _)| k.as_str())
    }

    pub fn sentence(&self, object_label: &str, attribute_type: &str, value: &str) -> Result<String, OracleError> {
        let t = self
            .get(attribute_type)
            .ok_or_else(|| OracleError::UnknownAttributeType(attribute_type.to_string()))?;
        Ok(t.template
            .replace("{type}", attribute_type)
            .replace("{object}", object_label)
            .replace("{value}", value))
    }

    /// One sentence per candidate.
    pub fn build_sentences(
        &self,
        object_label: &str,
        attribute_type: &str,
        candidates: &[String],
    ) -> Result<Vec<String>, OracleError> {
        candidates
            .iter()
            .map(|c| self.sentence(object_label, attribute_type, c))
            .collect()
    }

    /// Affirmative and negated sentence for a value outside the dictionary.
    pub fn negation_pair(object_label: &str, value: &str) -> [String; 2] {
        [
            format!("The {object_label} is {value}"),
            format!("The {object_label} is not {value}"),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_sentence() {
        let d = AttributeDictionary::bundled();
        assert_eq!(
            d.build_sentences("chair", "colour", &["red".into()]).unwrap(),
            vec!["The colour of the chair is red"]
        );
        let s = d.build_sentences("fence", "material", &["wood".into(), "metal".into()]).unwrap();
        assert_eq!(s.len(), 2);
        assert!(matches!(
            d.build_sentences("fence", "zorp", &["a".into()]),
            Err(OracleError::UnknownAttributeType(_))
        ));
    }

    #[test]
    fn lookups() {
        let d = AttributeDictionary::bundled();
        assert_eq!(d.type_of("Metal"), Some("material"));
        assert_eq!(d.type_of("red"), Some("color"));
        assert_eq!(d.type_of("zorp"), None);
        assert!(d.types().all(|t| d.get(t).unwrap().values.len() >= 2));
    }

    #[test]
    fn rejects_single_value_types() {
        assert!(AttributeDictionary::from_json(r#"{"x": {"values": ["a"]}}"#).is_err());
        assert!(AttributeDictionary::from_json(r#"{"x": {"values": ["a", "b"], "template": "no slot"}}"#).is_err());
    }

    #[test]
    fn json_round_trip() {
        let d = AttributeDictionary::bundled();
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(AttributeDictionary::from_json(&text).unwrap(), d);
    }
}
