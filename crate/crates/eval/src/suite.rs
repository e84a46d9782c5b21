//! Synthetic question suite covering every implemented program function,
//! with answers fixed by scene geometry and annotated attributes.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use ssp_core::hrr::RngSeed;
use ssp_core::masks::{learn_masks, region_cells, MIN_ANCHOR_SIZE, LearnReport, MaskLibrary, DEFAULT_MIN_SAMPLES, DEFAULT_THRESHOLD};
use ssp_core::oracle::AttributeDictionary;
use ssp_core::program::{parse_program, Function};
use ssp_core::scene::{normalize_object, GraphObject, GridPose, ImageSize, SceneGraph, SceneObject, WH_MAX};

use crate::dataset::{Dataset, Question};
use crate::synth::{
    annotate_relations, generate_scene, generate_scenes, relation_holds, CountDist, PixelBox, SyntheticSceneSpec,
};

/// Scenes used to learn the masks of the generated relations.
pub fn relation_corpus(scenes: usize, seed: RngSeed) -> Vec<SceneGraph> {
    let spec = SyntheticSceneSpec {
        object_count: CountDist::OnePlusPoisson { mean: 9.0 },
        min_side: 0.06,
        max_side: 0.35,
        ..SyntheticSceneSpec::capacity(scenes, seed)
    };
    generate_scenes(&spec).expect("overlapping boxes always fit")
}

/// Masks learned from [`relation_corpus`] with the default threshold and
/// sample minimum, with the bundled synonym and inverse tables.
pub fn train_masks(scenes: usize, seed: RngSeed) -> (MaskLibrary, LearnReport) {
    let corpus = relation_corpus(scenes, seed);
    let (masks, report) = learn_masks(&corpus, DEFAULT_MIN_SAMPLES, DEFAULT_THRESHOLD);
    (MaskLibrary::with_default_tables(masks), report)
}

pub const DEFAULT_CORPUS_SCENES: usize = 1000;

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub questions: usize,
    pub seed: RngSeed,
    pub min_objects: usize,
    pub max_objects: usize,
    /// Grid units by which an answer must lie inside, and a distractor
    /// outside, a relation region.
    pub region_margin: f64,
    /// Grid units by which an object centre must clear the image midline.
    pub half_margin: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            questions: 200,
            seed: RngSeed(2024),
            min_objects: 4,
            max_objects: 6,
            region_margin: 2.0,
            half_margin: 4.0,
        }
    }
}

/// Program shape of a generated question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Template {
    QueryColor,
    FilterQueryMaterial,
    FilterNot,
    Verify,
    VerifyF,
    QueryF,
    ChooseF,
    ChooseAttr,
    ChooseSubj,
    FilterH,
    FilterV,
    ChooseH,
    ChooseV,
    QueryH,
    QueryV,
    Exist,
    AndOr,
    RelateInv,
    Relate,
    RelateInvName,
    RelateName,
    VerifyRel,
    VerifyRelInv,
    ChooseRelInv,
}

impl Template {
    pub const ALL: [Template; 24] = [
        Template::QueryColor,
        Template::FilterQueryMaterial,
        Template::FilterNot,
        Template::Verify,
        Template::VerifyF,
        Template::QueryF,
        Template::ChooseF,
        Template::ChooseAttr,
        Template::ChooseSubj,
        Template::FilterH,
        Template::FilterV,
        Template::ChooseH,
        Template::ChooseV,
        Template::QueryH,
        Template::QueryV,
        Template::Exist,
        Template::AndOr,
        Template::RelateInv,
        Template::Relate,
        Template::RelateInvName,
        Template::RelateName,
        Template::VerifyRel,
        Template::VerifyRelInv,
        Template::ChooseRelInv,
    ];
}

/// Directional relations whose masks the suite relies on.
const DIRECTIONS: [&str; 4] = ["to the left of", "to the right of", "above", "below"];

struct SceneFacts<'a> {
    graph: &'a SceneGraph,
    ids: Vec<String>,
    poses: BTreeMap<String, GridPose>,
    image: ImageSize,
    lib: &'a MaskLibrary,
    cfg: &'a SuiteConfig,
}

impl<'a> SceneFacts<'a> {
    fn new(graph: &'a SceneGraph, lib: &'a MaskLibrary, cfg: &'a SuiteConfig) -> Self {
        let image = graph.image().expect("generated scenes have a valid size");
        let poses = graph
            .objects
            .iter()
            .map(|(id, o)| {
                let so = SceneObject::new(id.clone(), o.name.clone(), o.x, o.y, o.w, o.h);
                (id.clone(), normalize_object(image, &so).expect("valid box"))
            })
            .collect();
        Self {
            graph,
            ids: graph.objects.keys().cloned().collect(),
            poses,
            image,
            lib,
            cfg,
        }
    }

    fn obj(&self, id: &str) -> &GraphObject {
        &self.graph.objects[id]
    }

    fn label(&self, id: &str) -> &str {
        &self.obj(id).name
    }

    fn color(&self, id: &str) -> &str {
        &self.obj(id).attributes[0]
    }

    fn material(&self, id: &str) -> &str {
        &self.obj(id).attributes[1]
    }

    fn holds(&self, subject: &str, relation: &str, object: &str) -> bool {
        relation_holds(relation, &PixelBox::of(self.obj(subject)), &PixelBox::of(self.obj(object)))
    }

    fn side_h(&self, id: &str) -> Option<&'static str> {
        let (w, _) = self.image.grid_extent();
        let cx = self.poses[id].center().0;
        if (cx - w / 2.0).abs() < self.cfg.half_margin {
            None
        } else if cx < w / 2.0 {
            Some("left")
        } else {
            Some("right")
        }
    }

    fn side_v(&self, id: &str) -> Option<&'static str> {
        let (_, h) = self.image.grid_extent();
        let cy = self.poses[id].center().1;
        if (cy - h / 2.0).abs() < self.cfg.half_margin {
            None
        } else if cy < h / 2.0 {
            Some("top")
        } else {
            Some("bottom")
        }
    }

    /// Regions queried around `anchor`: from its true pose and from every
    /// snapped pose whose w and h are within one unit, which covers the
    /// size error of a near-correct decode.
    fn regions(&self, anchor: &str, relation: &str, inverse: bool) -> Vec<HashSet<(u32, u32)>> {
        let mask = self.lib.mask_for(relation, inverse).expect("suite relations have masks");
        let pose = self.poses[anchor];
        let snapped = pose.snapped();
        let mut poses = vec![pose];
        for dw in [-1.0, 0.0, 1.0] {
            for dh in [-1.0, 0.0, 1.0] {
                poses.push(GridPose {
                    w: (snapped.w + dw).clamp(MIN_ANCHOR_SIZE, f64::from(WH_MAX)),
                    h: (snapped.h + dh).clamp(MIN_ANCHOR_SIZE, f64::from(WH_MAX)),
                    ..snapped
                });
            }
        }
        poses
            .iter()
            .map(|p| region_cells(&mask, p).expect("poses are non-degenerate").into_iter().collect())
            .collect()
    }

    /// Cells within the margin of an object centre.
    fn neighbourhood(&self, id: &str) -> Vec<(u32, u32)> {
        let (cx, cy) = self.poses[id].center();
        let m = self.cfg.region_margin;
        let mut out = Vec::new();
        for dx in [-m, 0.0, m] {
            for dy in [-m, 0.0, m] {
                let (x, y) = ((cx + dx).round(), (cy + dy).round());
                if (0.0..=100.0).contains(&x) && (0.0..=100.0).contains(&y) {
                    out.push((x as u32, y as u32));
                }
            }
        }
        out
    }

    fn inside(&self, regions: &[HashSet<(u32, u32)>], id: &str) -> bool {
        let n = self.neighbourhood(id);
        regions.iter().all(|r| n.iter().all(|c| r.contains(c)))
    }

    fn outside(&self, regions: &[HashSet<(u32, u32)>], id: &str) -> bool {
        let n = self.neighbourhood(id);
        !regions.iter().any(|r| n.iter().any(|c| r.contains(c)))
    }

    /// Objects `X` with `X relation anchor` (or `anchor relation X` when
    /// `inverse`), if exactly one qualifies and every other object clearly
    /// does not, both by predicate and by region.
    fn unique_related(&self, anchor: &str, relation: &str, inverse: bool) -> Option<String> {
        let region = self.regions(anchor, relation, inverse);
        let rel = |x: &str| {
            if inverse {
                self.holds(anchor, relation, x)
            } else {
                self.holds(x, relation, anchor)
            }
        };
        let mut hit = None;
        for x in self.ids.iter().filter(|x| x.as_str() != anchor) {
            if rel(x) && self.inside(&region, x) {
                if hit.is_some() {
                    return None;
                }
                hit = Some(x.clone());
            } else if rel(x) || !self.outside(&region, x) {
                return None;
            }
        }
        hit
    }

    /// Whether `x` is clearly outside the region and the predicate fails.
    fn clearly_unrelated(&self, anchor: &str, relation: &str, inverse: bool, x: &str) -> bool {
        let region = self.regions(anchor, relation, inverse);
        let rel = if inverse {
            self.holds(anchor, relation, x)
        } else {
            self.holds(x, relation, anchor)
        };
        !rel && self.outside(&region, x)
    }
}

fn pick<'v, T, R: Rng>(rng: &mut R, v: &'v [T]) -> &'v T {
    v.choose(rng).expect("non-empty")
}

fn other_value<R: Rng>(rng: &mut R, values: &[String], not: &str) -> String {
    let rest: Vec<&String> = values.iter().filter(|v| v.as_str() != not).collect();
    (*pick(rng, &rest)).clone()
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

/// Builds one question of `template` on a scene, or `None` when the scene
/// does not allow an unambiguous instance.
fn instantiate<R: Rng>(
    t: Template,
    f: &SceneFacts<'_>,
    dict: &AttributeDictionary,
    absent: &[String],
    rng: &mut R,
) -> Option<(String, String, String)> {
    let ids = &f.ids;
    let a = pick(rng, ids).clone();
    let la = f.label(&a).to_string();
    let colors = &dict.get("color")?.values;
    let locations = &dict.get("location")?.values;
    let location = f.graph.location.clone()?;
    let q = |p: String, text: String, ans: String| Some((p, text, ans));
    match t {
        Template::QueryColor => q(
            format!("select({la}); query(#0, color)"),
            format!("What color is the {la}?"),
            f.color(&a).into(),
        ),
        Template::FilterQueryMaterial => {
            let c = f.color(&a);
            q(
                format!("select({la}); filter(#0, {c}); query(#1, material)"),
                format!("What is the {c} {la} made of?"),
                f.material(&a).into(),
            )
        }
        Template::FilterNot => {
            let c = other_value(rng, colors, f.color(&a));
            q(
                format!("select({la}); filter_not(#0, {c}); query_n(#1)"),
                format!("What is the object that is not {c}?"),
                la,
            )
        }
        Template::Verify => {
            let truth = rng.gen_bool(0.5);
            let c = if truth { f.color(&a).to_string() } else { other_value(rng, colors, f.color(&a)) };
            q(format!("select({la}); verify(#0, {c})"), format!("Is the {la} {c}?"), yes_no(truth))
        }
        Template::VerifyF => {
            let truth = rng.gen_bool(0.5);
            let l = if truth { location.clone() } else { other_value(rng, locations, &location) };
            q(format!("verify_f({l})"), format!("Is this a {l}?"), yes_no(truth))
        }
        Template::QueryF => {
            let ty = if rng.gen_bool(0.5) { "location" } else { "weather" };
            let ans = if ty == "location" { location } else { f.graph.weather.clone()? };
            q(format!("query_f({ty})"), format!("What is the {ty} of the scene?"), ans)
        }
        Template::ChooseF => {
            let other = other_value(rng, locations, &location);
            let (x, y) = if rng.gen_bool(0.5) { (location.clone(), other) } else { (other, location.clone()) };
            q(format!("choose_f({x}, {y})"), format!("Is this a {x} or a {y}?"), location)
        }
        Template::ChooseAttr => {
            let c = f.color(&a).to_string();
            let o = other_value(rng, colors, &c);
            let (x, y) = if rng.gen_bool(0.5) { (c.clone(), o) } else { (o, c.clone()) };
            q(
                format!("select({la}); choose_attr(#0, color, {x}, {y})"),
                format!("Is the {la} {x} or {y}?"),
                c,
            )
        }
        Template::ChooseSubj => {
            let b = pick(rng, ids).clone();
            if b == a || f.color(&a) == f.color(&b) {
                return None;
            }
            let lb = f.label(&b).to_string();
            let c = f.color(&a);
            q(
                format!("select({la}); select({lb}); choose_subj(#0, #1, {c})"),
                format!("Which is {c}, the {la} or the {lb}?"),
                la,
            )
        }
        Template::FilterH => {
            let s = f.side_h(&a)?;
            q(
                format!("select({la}); filter_h(#0, {s}); query_n(#1)"),
                format!("What is the object on the {s}?"),
                la,
            )
        }
        Template::FilterV => {
            let s = f.side_v(&a)?;
            q(
                format!("select({la}); filter_v(#0, {s}); query_n(#1)"),
                format!("What is the object at the {s}?"),
                la,
            )
        }
        Template::ChooseH => {
            let s = f.side_h(&a)?;
            q(
                format!("select({la}); choose_h(#0, left, right)"),
                format!("Is the {la} on the left or the right?"),
                s.into(),
            )
        }
        Template::ChooseV => {
            let s = f.side_v(&a)?;
            q(
                format!("select({la}); choose_v(#0, top, bottom)"),
                format!("Is the {la} at the top or the bottom?"),
                s.into(),
            )
        }
        Template::QueryH => {
            let s = f.side_h(&a)?;
            q(format!("select({la}); query_h(#0)"), format!("On which side is the {la}?"), s.into())
        }
        Template::QueryV => {
            let s = f.side_v(&a)?;
            q(format!("select({la}); query_v(#0)"), format!("Is the {la} at the top or bottom?"), s.into())
        }
        Template::Exist => {
            let present = rng.gen_bool(0.5);
            let l = if present { la } else { pick(rng, absent).clone() };
            q(format!("select({l}); exist(#0)"), format!("Is there a {l}?"), yes_no(present))
        }
        Template::AndOr => {
            let z = pick(rng, absent).clone();
            let and = rng.gen_bool(0.5);
            let op = if and { "and" } else { "or" };
            q(
                format!("select({la}); exist(#0); select({z}); exist(#2); {op}(#1, #3)"),
                format!("Is there a {la} {op} a {z}?"),
                yes_no(!and),
            )
        }
        Template::RelateInv
        | Template::Relate
        | Template::RelateInvName
        | Template::RelateName
        | Template::VerifyRel
        | Template::VerifyRelInv
        | Template::ChooseRelInv => relation_question(t, f, &a, rng),
    }
}

fn relation_question<R: Rng>(t: Template, f: &SceneFacts<'_>, a: &str, rng: &mut R) -> Option<(String, String, String)> {
    let r = *pick(rng, &DIRECTIONS);
    let la = f.label(a).to_string();
    let q = |p: String, text: String, ans: String| Some((p, text, ans));
    match t {
        Template::RelateInv => {
            let x = f.unique_related(a, r, false)?;
            q(
                format!("select({la}); relate_inv(#0, {r}); query_n(#1)"),
                format!("What is {r} the {la}?"),
                f.label(&x).into(),
            )
        }
        Template::Relate => {
            let x = f.unique_related(a, r, true)?;
            q(
                format!("select({la}); relate(#0, {r}); query_n(#1)"),
                format!("What is the {la} {r}?"),
                f.label(&x).into(),
            )
        }
        Template::RelateInvName => {
            let x = f.unique_related(a, r, false)?;
            let lx = f.label(&x);
            q(
                format!("select({la}); relate_inv_name(#0, {r}, {lx}); query(#1, color)"),
                format!("What color is the {lx} {r} the {la}?"),
                f.color(&x).into(),
            )
        }
        Template::RelateName => {
            let x = f.unique_related(a, r, true)?;
            let lx = f.label(&x);
            q(
                format!("select({la}); relate_name(#0, {r}, {lx}); query(#1, material)"),
                format!("What material is the {lx} that the {la} is {r}?"),
                f.material(&x).into(),
            )
        }
        Template::VerifyRel => {
            // Is A r B? Positive when B is the unique object with A r B.
            if rng.gen_bool(0.5) {
                let b = f.unique_related(a, r, true)?;
                let lb = f.label(&b);
                q(format!("select({la}); verify_rel(#0, {r}, {lb})"), format!("Is the {la} {r} the {lb}?"), "yes".into())
            } else {
                let b = pick(rng, &f.ids).clone();
                if b == a || !f.clearly_unrelated(a, r, true, &b) {
                    return None;
                }
                let lb = f.label(&b);
                q(format!("select({la}); verify_rel(#0, {r}, {lb})"), format!("Is the {la} {r} the {lb}?"), "no".into())
            }
        }
        Template::VerifyRelInv => {
            // Is X r A?
            if rng.gen_bool(0.5) {
                let x = f.unique_related(a, r, false)?;
                let lx = f.label(&x);
                q(
                    format!("select({la}); verify_rel_inv(#0, {r}, {lx})"),
                    format!("Is the {lx} {r} the {la}?"),
                    "yes".into(),
                )
            } else {
                let x = pick(rng, &f.ids).clone();
                if x == a || !f.clearly_unrelated(a, r, false, &x) {
                    return None;
                }
                let lx = f.label(&x);
                q(
                    format!("select({la}); verify_rel_inv(#0, {r}, {lx})"),
                    format!("Is the {lx} {r} the {la}?"),
                    "no".into(),
                )
            }
        }
        Template::ChooseRelInv => {
            // Is X left or right of A (or above or below)?
            let (p, n) = if rng.gen_bool(0.5) { ("left", "right") } else { ("above", "below") };
            fn full(s: &'static str) -> &'static str {
                match s {
                    "left" => "to the left of",
                    "right" => "to the right of",
                    other => other,
                }
            }
            let x = pick(rng, &f.ids).clone();
            if x == a {
                return None;
            }
            let pr = full(p);
            let nr = full(n);
            let hp = f.holds(&x, pr, a) && f.inside(&f.regions(a, pr, false), &x);
            let hn = f.holds(&x, nr, a) && f.inside(&f.regions(a, nr, false), &x);
            let clear = |rel: &str| !f.holds(&x, rel, a) && f.outside(&f.regions(a, rel, false), &x);
            let ans = match (hp, hn) {
                (true, false) if clear(nr) => p,
                (false, true) if clear(pr) => n,
                _ => return None,
            };
            let lx = f.label(&x);
            let (c1, c2) = if rng.gen_bool(0.5) { (p, n) } else { (n, p) };
            q(
                format!("select({la}); choose_rel_inv(#0, {lx}, {c1}, {c2})"),
                format!("Is the {lx} {c1} or {c2} the {la}?"),
                ans.into(),
            )
        }
        _ => None,
    }
}

/// A suite scene: non-overlapping boxes with distinct labels, plus scene
/// location and weather.
pub fn suite_scene(cfg: &SuiteConfig, dict: &AttributeDictionary, seed: RngSeed, image_id: String) -> SceneGraph {
    let mut rng = seed.derive(1).rng();
    let n = rng.gen_range(cfg.min_objects..=cfg.max_objects);
    let spec = SyntheticSceneSpec {
        non_overlapping: true,
        min_side: 0.1,
        max_side: 0.22,
        ..SyntheticSceneSpec::fixed(1, n, seed)
    };
    let mut g = generate_scene(&spec, seed, image_id).expect("small non-overlapping scenes fit");
    let labels: Vec<&String> = spec.labels.choose_multiple(&mut rng, n).collect();
    for (o, l) in g.objects.values_mut().zip(labels) {
        o.name = l.clone();
    }
    annotate_relations(&mut g.objects);
    g.location = Some(pick(&mut rng, &dict.get("location").expect("bundled").values).clone());
    g.weather = Some(pick(&mut rng, &dict.get("weather").expect("bundled").values).clone());
    g
}

/// Generates scenes and questions, cycling through the templates so that
/// each appears about equally often.
pub fn build_suite(cfg: &SuiteConfig, lib: &MaskLibrary, dict: &AttributeDictionary) -> Dataset {
    let mut rng = cfg.seed.derive(2).rng();
    let mut scenes = Vec::new();
    let mut questions = Vec::new();
    let mut next = 0usize;
    let per_scene = 4;
    let mut i = 0u64;
    while questions.len() < cfg.questions {
        let g = suite_scene(cfg, dict, cfg.seed.derive(i), format!("suite{i}"));
        i += 1;
        let present: HashSet<&str> = g.objects.values().map(|o| o.name.as_str()).collect();
        let absent: Vec<String> = crate::synth::DEFAULT_LABELS
            .iter()
            .filter(|l| !present.contains(*l))
            .map(|l| l.to_string())
            .collect();
        let facts = SceneFacts::new(&g, lib, cfg);
        let mut made = 0;
        for _ in 0..2 * per_scene {
            if made == per_scene || questions.len() == cfg.questions {
                break;
            }
            let t = Template::ALL[next % Template::ALL.len()];
            if let Some((program, question, answer)) = instantiate(t, &facts, dict, &absent, &mut rng) {
                questions.push(Question {
                    question_id: format!("q{:04}", questions.len()),
                    image_id: g.image_id.clone(),
                    question,
                    program: parse_program(&program).expect("templates are well-formed"),
                    answer,
                });
                next += 1;
                made += 1;
            }
        }
        if made > 0 {
            scenes.push(g);
        }
    }
    Dataset::new(scenes, questions)
}

/// Functions of all programs in a dataset.
pub fn covered_functions(data: &Dataset) -> HashSet<Function> {
    data.questions.iter().flat_map(|q| q.program.functions()).collect()
}

fn object(name: &str, b: [f64; 4], attrs: &[&str]) -> GraphObject {
    GraphObject {
        name: name.into(),
        x: b[0],
        y: b[1],
        w: b[2],
        h: b[3],
        attributes: attrs.iter().map(|s| s.to_string()).collect(),
        relations: Vec::new(),
    }
}

/// A metal shelf with a bowl on it and a few other objects, and the program
/// of "What is on the shelf made of metal?".
pub fn shelf_scene() -> (SceneGraph, Question) {
    let mut objects = BTreeMap::new();
    objects.insert("0".into(), object("shelf", [240.0, 240.0, 160.0, 120.0], &["brown", "metal"]));
    objects.insert("1".into(), object("bowl", [285.0, 190.0, 70.0, 60.0], &["white", "ceramic"]));
    objects.insert("2".into(), object("lamp", [20.0, 180.0, 60.0, 130.0], &["yellow", "glass"]));
    objects.insert("3".into(), object("chair", [300.0, 380.0, 100.0, 95.0], &["red", "wood"]));
    objects.insert("4".into(), object("plant", [570.0, 150.0, 60.0, 100.0], &["green", "plastic"]));
    annotate_relations(&mut objects);
    let g = SceneGraph {
        image_id: "shelf".into(),
        width: 640.0,
        height: 480.0,
        objects,
        attributes: Vec::new(),
        location: Some("kitchen".into()),
        weather: None,
    };
    let q = Question {
        question_id: "shelf".into(),
        image_id: "shelf".into(),
        question: "What is on the shelf made of metal?".into(),
        program: parse_program("select(shelf); filter(#0, metal); relate_inv(#1, on); query_name(#2)")
            .expect("well-formed"),
        answer: "bowl".into(),
    };
    (g, q)
}

/// Number of questions per template, keyed by the template's first
/// distinctive function.
pub fn template_counts(data: &Dataset) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for q in &data.questions {
        let key: Vec<&str> = q.program.steps().iter().map(|s| s.function.as_str()).collect();
        *out.entry(key.join(">")).or_default() += 1;
    }
    out
}
