//! Synthetic annotated scenes standing in for real scene graphs.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};
use ssp_core::hrr::RngSeed;
use ssp_core::scene::{GraphObject, GraphRelation, SceneGraph, WH_SCALE, XY_MAX};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("could not place {requested} non-overlapping boxes (placed {placed})")]
    Infeasible { requested: usize, placed: usize },
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CountDist {
    Fixed { n: usize },
    /// `1 + Poisson(mean - 1)`, so the mean is `mean`.
    OnePlusPoisson { mean: f64 },
    /// `1 + NegativeBinomial`, drawn as Poisson with a Gamma(shape) rate whose
    /// mean is `mean - 1`. Smaller shapes give a heavier tail of crowded scenes.
    OnePlusNegBinomial { mean: f64, shape: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSceneSpec {
    pub scenes: usize,
    pub object_count: CountDist,
    pub image_width: f64,
    pub image_height: f64,
    /// Box sides are log-uniform in `[min_side, max_side]` times the long image side.
    pub min_side: f64,
    pub max_side: f64,
    pub non_overlapping: bool,
    pub labels: Vec<String>,
    pub colors: Vec<String>,
    pub materials: Vec<String>,
    pub seed: RngSeed,
}

pub const DEFAULT_LABELS: &[&str] = &[
    "bed", "chair", "table", "sofa", "shelf", "desk", "cabinet", "lamp", "dog", "cat", "horse", "bird", "car",
    "truck", "bus", "bicycle", "boat", "man", "woman", "boy", "girl", "tree", "plant", "flower", "cup", "bowl",
    "plate", "bottle", "glass", "vase", "book", "clock", "laptop", "phone", "television", "hat", "shirt", "bag",
    "umbrella", "ball", "kite", "sign", "window", "door", "fence", "pillow", "blanket", "towel", "box", "basket",
];
pub const DEFAULT_COLORS: &[&str] = &["red", "blue", "green", "white", "black", "yellow", "brown", "gray"];
pub const DEFAULT_MATERIALS: &[&str] = &["wood", "metal", "plastic", "glass", "fabric", "stone"];

fn owned(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl SyntheticSceneSpec {
    /// Scenes matched to the load of real scene graphs: on average 17
    /// objects on a 640×480 image with an overdispersed count, sides from 15%
    /// to 90% of the long side.
    pub fn capacity(scenes: usize, seed: RngSeed) -> Self {
        Self {
            scenes,
            object_count: CountDist::OnePlusNegBinomial { mean: 17.0, shape: 3.0 },
            image_width: 640.0,
            image_height: 480.0,
            min_side: 0.15,
            max_side: 0.9,
            non_overlapping: false,
            labels: owned(DEFAULT_LABELS),
            colors: owned(DEFAULT_COLORS),
            materials: owned(DEFAULT_MATERIALS),
            seed,
        }
    }

    pub fn fixed(scenes: usize, n: usize, seed: RngSeed) -> Self {
        Self {
            object_count: CountDist::Fixed { n },
            ..Self::capacity(scenes, seed)
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
        if !(self.image_width > 0.0 && self.image_height > 0.0) {
            return bad("image size must be positive");
        }
        if !(self.min_side > 0.0 && self.min_side <= self.max_side) {
            return bad("side range must satisfy 0 < min <= max");
        }
        if self.labels.is_empty() || self.colors.is_empty() || self.materials.is_empty() {
            return bad("label and attribute pools must be non-empty");
        }
        match self.object_count {
            CountDist::Fixed { n: 0 } => bad("object count must be at least 1"),
            CountDist::OnePlusPoisson { mean } if mean.is_nan() || mean < 1.0 => bad("mean object count must be at least 1"),
            CountDist::OnePlusNegBinomial { mean, shape } if !(mean >= 1.0 && shape > 0.0 && shape.is_finite()) => {
                bad("negative binomial needs mean >= 1 and a positive shape")
            }
            _ => Ok(()),
        }
    }
}

/// Pixel box with the relation predicates used in the generated annotations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl PixelBox {
    pub fn of(o: &GraphObject) -> Self {
        Self {
            x: o.x,
            y: o.y,
            w: o.w,
            h: o.h,
        }
    }

    pub fn cx(&self) -> f64 {
        self.x + self.w / 2.0
    }

    pub fn cy(&self) -> f64 {
        self.y + self.h / 2.0
    }

    fn overlap_1d(a0: f64, a1: f64, b0: f64, b1: f64) -> bool {
        a0.max(b0) < a1.min(b1)
    }

    pub fn overlaps_v(&self, o: &PixelBox) -> bool {
        Self::overlap_1d(self.y, self.y + self.h, o.y, o.y + o.h)
    }

    pub fn overlaps_h(&self, o: &PixelBox) -> bool {
        Self::overlap_1d(self.x, self.x + self.w, o.x, o.x + o.w)
    }

    pub fn intersects(&self, o: &PixelBox) -> bool {
        self.overlaps_h(o) && self.overlaps_v(o)
    }
}

/// Canonical relations produced by the generator.
pub const RELATIONS: &[&str] = &["to the right of", "to the left of", "above", "below", "on", "under"];

/// Whether `relation` holds with `s` as subject and `o` as object.
pub fn relation_holds(relation: &str, s: &PixelBox, o: &PixelBox) -> bool {
    match relation {
        "to the right of" => s.cx() > o.cx() && s.overlaps_v(o),
        "to the left of" => s.cx() < o.cx() && s.overlaps_v(o),
        "above" => s.cy() < o.cy() && s.overlaps_h(o),
        "below" => s.cy() > o.cy() && s.overlaps_h(o),
        "on" => {
            let bottom = s.y + s.h;
            s.cx() > o.x && s.cx() < o.x + o.w && bottom >= o.y && bottom <= o.y + 0.5 * o.h && s.y < o.y
        }
        "under" => relation_holds("on", o, s),
        _ => false,
    }
}

/// Adds every relation that holds between two distinct objects.
pub fn annotate_relations(objects: &mut BTreeMap<String, GraphObject>) {
    let boxes: Vec<(String, PixelBox)> = objects.iter().map(|(k, o)| (k.clone(), PixelBox::of(o))).collect();
    for (sid, sb) in &boxes {
        let mut rels = Vec::new();
        for (oid, ob) in &boxes {
            if sid == oid {
                continue;
            }
            for r in RELATIONS {
                if relation_holds(r, sb, ob) {
                    rels.push(GraphRelation {
                        name: r.to_string(),
                        object: oid.clone(),
                    });
                }
            }
        }
        objects.get_mut(sid).expect("own key").relations = rels;
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

pub fn generate_scenes(spec: &SyntheticSceneSpec) -> Result<Vec<SceneGraph>, SynthError> {
    spec.validate()?;
    (0..spec.scenes)
        .map(|i| generate_scene(spec, spec.seed.derive(i as u64), format!("synth{i}")))
        .collect()
}

pub fn generate_scene(spec: &SyntheticSceneSpec, seed: RngSeed, image_id: String) -> Result<SceneGraph, SynthError> {
    spec.validate()?;
    let mut rng = seed.rng();
    let n = match spec.object_count {
        CountDist::Fixed { n } => n,
        CountDist::OnePlusPoisson { mean } => {
            let extra = if mean > 1.0 {
                Poisson::new(mean - 1.0).expect("positive rate").sample(&mut rng) as usize
            } else {
                0
            };
            1 + extra
        }
        CountDist::OnePlusNegBinomial { mean, shape } => {
            let rate = if mean > 1.0 {
                Gamma::new(shape, (mean - 1.0) / shape).expect("validated").sample(&mut rng)
            } else {
                0.0
            };
            let extra = if rate > 0.0 {
                Poisson::new(rate).expect("positive rate").sample(&mut rng) as usize
            } else {
                0
            };
            1 + extra
        }
    };
    let (iw, ih) = (spec.image_width, spec.image_height);
    let long = iw.max(ih);
    let mut placed: Vec<PixelBox> = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while placed.len() < n {
        attempts += 1;
        if attempts > 2000 * n {
            return Err(SynthError::Infeasible {
                requested: n,
                placed: placed.len(),
            });
        }
        let w = log_uniform(&mut rng, spec.min_side * long, spec.max_side * long).min(iw).round().max(1.0);
        let h = log_uniform(&mut rng, spec.min_side * long, spec.max_side * long).min(ih).round().max(1.0);
        let x = rng.gen_range(0.0..=(iw - w)).round();
        let y = rng.gen_range(0.0..=(ih - h)).round();
        let b = PixelBox { x, y, w, h };
        if spec.non_overlapping && placed.iter().any(|p| p.intersects(&b)) {
            continue;
        }
        placed.push(b);
    }
    Ok(assemble(spec, &placed, &mut rng, image_id))
}

fn assemble<R: Rng>(spec: &SyntheticSceneSpec, placed: &[PixelBox], rng: &mut R, image_id: String) -> SceneGraph {
    let mut objects = BTreeMap::new();
    for (i, b) in placed.iter().enumerate() {
        let name = spec.labels.choose(rng).expect("non-empty").clone();
        let color = spec.colors.choose(rng).expect("non-empty").clone();
        let material = spec.materials.choose(rng).expect("non-empty").clone();
        objects.insert(
            format!("{i:03}"),
            GraphObject {
                name,
                x: b.x,
                y: b.y,
                w: b.w,
                h: b.h,
                attributes: vec![color, material],
                relations: Vec::new(),
            },
        );
    }
    annotate_relations(&mut objects);
    SceneGraph {
        image_id,
        width: spec.image_width,
        height: spec.image_height,
        objects,
        attributes: Vec::new(),
        location: None,
        weather: None,
    }
}

/// Equal-sized square objects in the slots of a 4×3 grid over a 640×480
/// image. Sides (one or two w/h units) and offsets are multiples of the grid
/// step, so every box is exactly representable, and every pair is either on
/// a shared row or column or offset by whole slots. Between 3 and 6 slots
/// are filled.
pub fn aligned_scene(seed: RngSeed, image_id: String) -> SceneGraph {
    let spec = SyntheticSceneSpec::fixed(1, 1, seed);
    let mut rng = seed.rng();
    let (cols, rows) = (4usize, 3usize);
    let step = spec.image_width.max(spec.image_height) / f64::from(XY_MAX);
    let slot = spec.image_width / cols as f64;
    let side = if rng.gen_bool(0.5) { 1.0 } else { 2.0 } * WH_SCALE * step;
    let offset = (((slot - side) / 2.0) / step).floor() * step;
    let n = rng.gen_range(3..=6);
    let slots = rand::seq::index::sample(&mut rng, cols * rows, n);
    let placed: Vec<PixelBox> = slots
        .iter()
        .map(|k| {
            let (c, r) = ((k % cols) as f64, (k / cols) as f64);
            PixelBox {
                x: c * slot + offset,
                y: r * slot + offset,
                w: side,
                h: side,
            }
        })
        .collect();
    assemble(&spec, &placed, &mut rng, image_id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_object_has_no_relations() {
        let s = generate_scenes(&SyntheticSceneSpec::fixed(1, 1, RngSeed(0))).unwrap();
        assert_eq!(s[0].objects.len(), 1);
        assert!(s[0].relation_triples().is_empty());
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = SyntheticSceneSpec::fixed(3, 10, RngSeed(5));
        assert_eq!(generate_scenes(&spec).unwrap(), generate_scenes(&spec).unwrap());
    }

    #[test]
    fn boxes_stay_inside_the_image() {
        for s in generate_scenes(&SyntheticSceneSpec::capacity(20, RngSeed(2))).unwrap() {
            for o in s.objects.values() {
                assert!(o.x >= 0.0 && o.y >= 0.0 && o.w >= 1.0 && o.h >= 1.0);
                assert!(o.x + o.w <= s.width && o.y + o.h <= s.height);
            }
        }
    }

    #[test]
    fn infeasible_packing_is_reported() {
        let mut spec = SyntheticSceneSpec::fixed(1, 200, RngSeed(1));
        spec.non_overlapping = true;
        spec.min_side = 0.5;
        spec.max_side = 0.6;
        assert!(matches!(generate_scenes(&spec), Err(SynthError::Infeasible { .. })));
    }

    #[test]
    fn predicates() {
        let a = PixelBox { x: 0.0, y: 0.0, w: 10.0, h: 10.0 };
        let b = PixelBox { x: 20.0, y: 5.0, w: 10.0, h: 10.0 };
        assert!(relation_holds("to the right of", &b, &a));
        assert!(relation_holds("to the left of", &a, &b));
        assert!(!relation_holds("above", &a, &b));
        let cup = PixelBox { x: 2.0, y: 0.0, w: 4.0, h: 11.0 };
        let table = PixelBox { x: 0.0, y: 10.0, w: 10.0, h: 10.0 };
        assert!(relation_holds("on", &cup, &table));
        assert!(relation_holds("under", &table, &cup));
    }
}
