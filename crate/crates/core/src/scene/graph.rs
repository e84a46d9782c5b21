//! Scene-graph JSON in the GQA layout.
//!
//! Accepted top-level shapes: one scene object, an array of scenes, or a map
//! from image id to scene (the key fills a missing `image_id`). Besides the
//! per-object fields, a scene may carry image-level `attributes` plus the
//! GQA `location` and `weather` strings, which are folded into them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ImageSize, SceneError, SceneObject};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRelation {
    pub name: String,
    pub object: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphObject {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    #[serde(default)]
    pub attributes: Vec<String>,
    #[serde(default)]
    pub relations: Vec<GraphRelation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    #[serde(default)]
    pub image_id: String,
    pub width: f64,
    pub height: f64,
    pub objects: BTreeMap<String, GraphObject>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attributes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weather: Option<String>,
}

impl SceneGraph {
    pub fn image(&self) -> Result<ImageSize, SceneError> {
        ImageSize::new(self.width, self.height)
    }

    /// Objects ordered by id, as encoder input.
    pub fn scene_objects(&self) -> Vec<SceneObject> {
        self.objects
            .iter()
            .map(|(id, o)| SceneObject::new(id.clone(), o.name.clone(), o.x, o.y, o.w, o.h))
            .collect()
    }

    /// Objects that pass validation; the second value counts those dropped.
    pub fn valid_scene_objects(&self) -> (Vec<SceneObject>, usize) {
        let all = self.scene_objects();
        let n = all.len();
        let ok: Vec<SceneObject> = all.into_iter().filter(|o| o.validate().is_ok()).collect();
        let dropped = n - ok.len();
        (ok, dropped)
    }

    /// Image-level attributes including location and weather.
    pub fn scene_attributes(&self) -> Vec<String> {
        let mut out = self.attributes.clone();
        out.extend(self.location.iter().cloned());
        out.extend(self.weather.iter().cloned());
        out
    }

    /// All `(subject_id, relation, object_id)` triples.
    pub fn relation_triples(&self) -> Vec<(String, String, String)> {
        let mut out = Vec::new();
        for (id, o) in &self.objects {
            for r in &o.relations {
                out.push((id.clone(), r.name.clone(), r.object.clone()));
            }
        }
        out
    }
}

pub fn parse_scene_graphs(json: &str) -> Result<Vec<SceneGraph>, SceneError> {
    let v: Value = serde_json::from_str(json).map_err(|e| SceneError::Parse(e.to_string()))?;
    scenes_from_value(v)
}

pub fn load_scene_graphs(path: &Path) -> Result<Vec<SceneGraph>, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|e| SceneError::Io(format!("{}: {e}", path.display())))?;
    parse_scene_graphs(&text)
}

pub fn save_scene_graphs(path: &Path, scenes: &[SceneGraph]) -> Result<(), SceneError> {
    let map: BTreeMap<&str, &SceneGraph> = scenes.iter().map(|s| (s.image_id.as_str(), s)).collect();
    let text = serde_json::to_string_pretty(&map).map_err(|e| SceneError::Parse(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| SceneError::Io(format!("{}: {e}", path.display())))
}

fn scene_from_value(v: Value, key: Option<&str>) -> Result<SceneGraph, SceneError> {
    let mut s: SceneGraph = serde_json::from_value(v).map_err(|e| SceneError::Parse(e.to_string()))?;
    if s.image_id.is_empty() {
        if let Some(k) = key {
            s.image_id = k.to_string();
        }
    }
    Ok(s)
}

fn scenes_from_value(v: Value) -> Result<Vec<SceneGraph>, SceneError> {
    match v {
        Value::Array(items) => items.into_iter().map(|i| scene_from_value(i, None)).collect(),
        Value::Object(map) if map.contains_key("objects") && map.contains_key("width") => {
            Ok(vec![scene_from_value(Value::Object(map), None)?])
        }
        Value::Object(map) => map
            .into_iter()
            .map(|(k, i)| scene_from_value(i, Some(&k)))
            .collect(),
        _ => Err(SceneError::Parse("expected a scene, an array or a map of scenes".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"{"image_id":"img1","width":640,"height":480,"location":"beach",
        "objects":{"1":{"name":"lamp","x":10,"y":20,"w":30,"h":40,"attributes":["white"],
        "relations":[{"name":"to the left of","object":"2"}]},
        "2":{"name":"bed","x":100,"y":20,"w":300,"h":200}}}"#;

    #[test]
    fn parses_single_scene() {
        let s = parse_scene_graphs(ONE).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].objects.len(), 2);
        assert_eq!(s[0].scene_attributes(), vec!["beach".to_string()]);
        assert_eq!(
            s[0].relation_triples(),
            vec![("1".to_string(), "to the left of".to_string(), "2".to_string())]
        );
    }

    #[test]
    fn parses_keyed_map() {
        let text = format!(r#"{{"a": {ONE}, "b": {{"width":1,"height":1,"objects":{{}}}}}}"#);
        let s = parse_scene_graphs(&text).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].image_id, "b");
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_scene_graphs("[1,2]").is_err());
        assert!(parse_scene_graphs("nope").is_err());
    }

    #[test]
    fn drops_degenerate_objects() {
        let text = r#"{"width":10,"height":10,"objects":{"1":{"name":"a","x":0,"y":0,"w":0,"h":2}}}"#;
        let s = parse_scene_graphs(text).unwrap();
        let (ok, dropped) = s[0].valid_scene_objects();
        assert!(ok.is_empty());
        assert_eq!(dropped, 1);
    }
}
