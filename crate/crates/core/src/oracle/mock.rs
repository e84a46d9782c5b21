use std::collections::BTreeMap;
use std::path::Path;

use super::{AttributeDictionary, AttributeOracle, OracleError, ScoreRequest, ScoreResponse};
use crate::masks::normalize_term;
use crate::scene::SceneGraph;

#[derive(Debug, Clone, PartialEq)]
struct MockObject {
    bbox: [f64; 4],
    attributes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct MockScene {
    objects: Vec<MockObject>,
    attributes: Vec<String>,
}

/// Ground-truth oracle answering from scene-graph attributes.
///
/// The request box is matched to the annotated object with the highest IoU.
/// A sentence names a value by ending with it and is negative when it
/// contains "not". It scores 1.0 when the value's presence among the
/// object's attributes agrees with the polarity, 0.0 otherwise. Requests
/// without a box use the scene-level attributes.
#[derive(Debug, Clone)]
pub struct MockOracle {
    scenes: BTreeMap<String, MockScene>,
    known: Vec<String>,
}

impl Default for MockOracle {
    fn default() -> Self {
        Self::with_dictionary(&AttributeDictionary::bundled())
    }
}

fn iou(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let iw = (a[0] + a[2]).min(b[0] + b[2]) - a[0].max(b[0]);
    let ih = (a[1] + a[3]).min(b[1] + b[3]) - a[1].max(b[1]);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    inter / (a[2] * a[3] + b[2] * b[3] - inter)
}

/// `(value, negated)` of a sentence. The value is the longest known value
/// the sentence ends with, else its last word.
fn claim<'v>(sentence: &str, known: impl Iterator<Item = &'v String>) -> (String, bool) {
    let s = normalize_term(sentence.trim_end_matches('.'));
    let negated = s.contains(" not ");
    let value = known
        .filter(|v| s == **v || s.ends_with(&format!(" {v}")))
        .max_by_key(|v| v.len())
        .cloned()
        .unwrap_or_else(|| s.rsplit(' ').next().unwrap_or("").to_string());
    (value, negated)
}

impl MockOracle {
    pub fn new() -> Self {
        Self::default()
    }

    /// Values of `dictionary` are recognized as multi-word sentence endings.
    pub fn with_dictionary(dictionary: &AttributeDictionary) -> Self {
        let mut known: Vec<String> = dictionary
            .types()
            .flat_map(|t| dictionary.get(t).expect("listed").values.iter().cloned())
            .collect();
        known.sort();
        known.dedup();
        Self {
            scenes: BTreeMap::new(),
            known,
        }
    }

    pub fn from_graphs<'a>(graphs: impl IntoIterator<Item = &'a SceneGraph>) -> Self {
        let mut m = Self::new();
        for g in graphs {
            m.insert(g);
        }
        m
    }

    pub fn insert(&mut self, graph: &SceneGraph) {
        let norm = |v: &[String]| v.iter().map(|a| normalize_term(a)).collect::<Vec<_>>();
        let scene = MockScene {
            objects: graph
                .objects
                .values()
                .map(|o| MockObject {
                    bbox: [o.x, o.y, o.w, o.h],
                    attributes: norm(&o.attributes),
                })
                .collect(),
            attributes: norm(&graph.scene_attributes()),
        };
        self.scenes.insert(graph.image_id.clone(), scene);
    }

    fn scene(&self, image: &str) -> Option<&MockScene> {
        self.scenes.get(image).or_else(|| {
            let stem = Path::new(image).file_stem()?.to_str()?;
            self.scenes.get(stem)
        })
    }

    fn attributes(&self, req: &ScoreRequest) -> Result<&[String], OracleError> {
        let scene = self
            .scene(&req.image)
            .ok_or_else(|| OracleError::UnknownImage(req.image.clone()))?;
        let Some(b) = req.bbox else {
            return Ok(&scene.attributes);
        };
        let mut best: Option<(f64, &MockObject)> = None;
        for o in &scene.objects {
            let v = iou(&b, &o.bbox);
            if v > 0.0 && best.is_none_or(|(s, _)| v > s) {
                best = Some((v, o));
            }
        }
        best.map(|(_, o)| o.attributes.as_slice())
            .ok_or(OracleError::UnknownObject(b))
    }
}

impl AttributeOracle for MockOracle {
    fn score(&self, req: &ScoreRequest) -> Result<ScoreResponse, OracleError> {
        req.validate()?;
        let attrs = self.attributes(req)?;
        let scores = req
            .sentences
            .iter()
            .map(|s| {
                let (value, negated) = claim(s, self.known.iter().chain(attrs));
                if attrs.contains(&value) != negated {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        Ok(ScoreResponse { scores })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::parse_scene_graphs;

    fn oracle() -> MockOracle {
        let g = parse_scene_graphs(
            r#"{"image_id": "img1", "width": 100, "height": 100, "location": "beach",
                "objects": {"1": {"name": "chair", "x": 10, "y": 10, "w": 20, "h": 20,
                                  "attributes": ["red", "wooden"], "relations": []}}}"#,
        )
        .unwrap();
        MockOracle::from_graphs(&g)
    }

    fn req(bbox: Option<[f64; 4]>, s: &[&str]) -> ScoreRequest {
        ScoreRequest {
            image: "img1".into(),
            bbox,
            sentences: s.iter().map(|x| x.to_string()).collect(),
        }
    }

    #[test]
    fn lookup_scores() {
        let o = oracle();
        let b = Some([12.0, 11.0, 18.0, 20.0]);
        let r = o
            .score(&req(b, &["The color of the chair is red", "The color of the chair is blue"]))
            .unwrap();
        assert_eq!(r.scores, vec![1.0, 0.0]);
        let r = o.score(&req(b, &["The chair is green", "The chair is pink"])).unwrap();
        assert_eq!(r.scores, vec![0.0, 0.0]);
        assert_eq!(r.argmax(), Some(0));
        let r = o.score(&req(b, &["The chair is wooden", "The chair is not wooden"])).unwrap();
        assert_eq!(r.scores, vec![1.0, 0.0]);
        let r = o.score(&req(b, &["The chair is light blue", "The chair is dark blue"])).unwrap();
        assert_eq!(r.scores, vec![0.0, 0.0]);
    }

    #[test]
    fn whole_image_and_errors() {
        let o = oracle();
        let r = o.score(&req(None, &["The image shows a street", "The image shows a beach"])).unwrap();
        assert_eq!(r.scores, vec![0.0, 1.0]);
        assert!(matches!(
            o.score(&req(Some([80.0, 80.0, 5.0, 5.0]), &["x is red"])),
            Err(OracleError::UnknownObject(_))
        ));
        let mut q = req(None, &["a is b"]);
        q.image = "missing".into();
        assert!(matches!(o.score(&q), Err(OracleError::UnknownImage(_))));
        q.image = "/data/images/img1.jpg".into();
        assert!(o.score(&q).is_ok());
    }
}
