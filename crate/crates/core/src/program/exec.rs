use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Arg, Function, Program, ProgramStep};
use crate::masks::{self, Anchor, HypernymTable, MaskError, MaskLibrary, Proposal, Region, RelateConfig};
use crate::oracle::{argmax, AttributeDictionary, AttributeOracle, ScoreRequest};
use crate::scene::{DecodeStrategy, GridPose, SSPMemory, WH_SCALE};

/// A located object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectValue {
    pub object_id: String,
    pub label: String,
    pub pose: GridPose,
    pub score: f64,
}

impl From<&Proposal> for ObjectValue {
    fn from(p: &Proposal) -> Self {
        Self {
            object_id: p.object_id.clone(),
            label: p.label.clone(),
            pose: p.pose,
            score: p.score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoAnswerReason {
    SelectFailed,
    FilterTerminated,
    UnsupportedFunction,
    BadProgram,
    /// A relation query found no positively similar object.
    NoProposal,
    /// The relation has no mask in the library.
    UnknownRelation,
    OracleUnavailable,
}

impl NoAnswerReason {
    pub const ALL: [NoAnswerReason; 7] = [
        NoAnswerReason::SelectFailed,
        NoAnswerReason::FilterTerminated,
        NoAnswerReason::UnsupportedFunction,
        NoAnswerReason::BadProgram,
        NoAnswerReason::NoProposal,
        NoAnswerReason::UnknownRelation,
        NoAnswerReason::OracleUnavailable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoAnswerReason::SelectFailed => "select_failed",
            NoAnswerReason::FilterTerminated => "filter_terminated",
            NoAnswerReason::UnsupportedFunction => "unsupported_function",
            NoAnswerReason::BadProgram => "bad_program",
            NoAnswerReason::NoProposal => "no_proposal",
            NoAnswerReason::UnknownRelation => "unknown_relation",
            NoAnswerReason::OracleUnavailable => "oracle_unavailable",
        }
    }
}

/// Value produced by one step.
///
/// A passing filter re-emits the object it filtered, so later steps can keep
/// referring to it. `NoResult` records why nothing was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum StepValue {
    Position(ObjectValue),
    Proposal(Proposal),
    Truth(bool),
    Answer(String),
    NoResult(NoAnswerReason),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Outcome {
    Answer(String),
    NoAnswer(NoAnswerReason),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub values: Vec<StepValue>,
    pub outcome: Outcome,
}

impl ExecutionTrace {
    pub fn answer(&self) -> Option<&str> {
        match &self.outcome {
            Outcome::Answer(a) => Some(a),
            Outcome::NoAnswer(_) => None,
        }
    }

    pub fn no_answer(&self) -> Option<NoAnswerReason> {
        match self.outcome {
            Outcome::NoAnswer(r) => Some(r),
            Outcome::Answer(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutorConfig {
    pub select: DecodeStrategy,
    pub relate: RelateConfig,
    /// Rewrites applied to object names before lookup, e.g. `soccer` to
    /// `soccer ball`. Empty by default.
    pub label_merges: BTreeMap<String, String>,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        Self {
            select: DecodeStrategy::Exhaustive,
            relate: RelateConfig::default(),
            label_merges: BTreeMap::new(),
        }
    }
}

/// Runs programs against one encoded image.
pub struct Executor<'a> {
    pub memory: &'a SSPMemory,
    pub masks: &'a MaskLibrary,
    pub oracle: &'a dyn AttributeOracle,
    pub dictionary: &'a AttributeDictionary,
    pub hypernyms: &'a HypernymTable,
    /// Image path or identifier sent to the oracle.
    pub image_ref: String,
    pub config: ExecutorConfig,
}

type Step<T> = Result<T, NoAnswerReason>;

enum Flow {
    Continue(StepValue),
    Stop(String),
}

/// Label used for whole-image sentences.
const IMAGE_LABEL: &str = "image";

impl<'a> Executor<'a> {
    pub fn new(
        memory: &'a SSPMemory,
        masks: &'a MaskLibrary,
        oracle: &'a dyn AttributeOracle,
        dictionary: &'a AttributeDictionary,
        hypernyms: &'a HypernymTable,
        image_ref: impl Into<String>,
    ) -> Self {
        Self {
            memory,
            masks,
            oracle,
            dictionary,
            hypernyms,
            image_ref: image_ref.into(),
            config: ExecutorConfig::default(),
        }
    }

    pub fn with_config(mut self, config: ExecutorConfig) -> Self {
        self.config = config;
        self
    }

    pub fn execute(&self, program: &Program) -> ExecutionTrace {
        let mut run = Run {
            ex: self,
            values: Vec::with_capacity(program.len()),
            memo: RefCell::new(HashMap::new()),
        };
        let outcome = run.run(program);
        ExecutionTrace {
            values: run.values,
            outcome,
        }
    }
}

struct Run<'e, 'a> {
    ex: &'e Executor<'a>,
    values: Vec<StepValue>,
    memo: RefCell<HashMap<String, Vec<f64>>>,
}

fn mask_reason(e: MaskError) -> NoAnswerReason {
    match e {
        MaskError::UnknownRelation(_) => NoAnswerReason::UnknownRelation,
        MaskError::AnchorNotFound(_) => NoAnswerReason::SelectFailed,
        _ => NoAnswerReason::BadProgram,
    }
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

impl Run<'_, '_> {
    fn run(&mut self, program: &Program) -> Outcome {
        let steps = program.steps();
        for (i, step) in steps.iter().enumerate() {
            match self.step(step) {
                Ok(Flow::Stop(answer)) => {
                    self.values.push(StepValue::Answer(answer.clone()));
                    return Outcome::Answer(answer);
                }
                Ok(Flow::Continue(v)) => {
                    let gate = matches!(v, StepValue::Truth(false))
                        && step.resolved().map(Function::kind) == Some(super::FunctionKind::Verify)
                        && !steps[i + 1..].iter().any(|s| s.references().any(|k| k == i));
                    self.values.push(v);
                    if gate {
                        return Outcome::Answer(yes_no(false));
                    }
                }
                Err(reason) => {
                    let v = if reason == NoAnswerReason::FilterTerminated {
                        StepValue::Truth(false)
                    } else {
                        StepValue::NoResult(reason)
                    };
                    self.values.push(v);
                    return Outcome::NoAnswer(reason);
                }
            }
        }
        match self.values.last().expect("programs are non-empty") {
            StepValue::Truth(b) => Outcome::Answer(yes_no(*b)),
            StepValue::Answer(a) => Outcome::Answer(a.clone()),
            StepValue::Position(o) => Outcome::Answer(o.label.clone()),
            StepValue::Proposal(p) => Outcome::Answer(p.label.clone()),
            StepValue::NoResult(r) => Outcome::NoAnswer(*r),
        }
    }

    fn step(&mut self, step: &ProgramStep) -> Step<Flow> {
        let f = step.resolved().ok_or(NoAnswerReason::UnsupportedFunction)?;
        if !f.is_implemented() {
            return Err(NoAnswerReason::UnsupportedFunction);
        }
        let (lo, hi) = f.arity();
        if step.args.len() < lo || step.args.len() > hi {
            return Err(NoAnswerReason::BadProgram);
        }
        let a = &step.args;
        use Function::*;
        let value = match f {
            Select => match self.select(&self.text(&a[0])?) {
                Ok(o) => StepValue::Position(o),
                Err(r) => StepValue::NoResult(r),
            },
            Relate | RelateInv => {
                let props = self.relate(&a[0], &self.text(&a[1])?, f == Relate)?;
                match props.into_iter().next() {
                    Some(p) => StepValue::Proposal(p),
                    None => StepValue::NoResult(NoAnswerReason::NoProposal),
                }
            }
            RelateName | RelateInvName => {
                let props = self.relate(&a[0], &self.text(&a[1])?, f == RelateName)?;
                match masks::relate_name(&props, &self.text(&a[2])?, self.ex.hypernyms) {
                    Some(p) => StepValue::Proposal(p),
                    None => StepValue::NoResult(NoAnswerReason::NoProposal),
                }
            }
            FilterV | FilterH | Filter | FilterNot => {
                let o = self.object(&a[0])?;
                let want = self.text(&a[1])?;
                let pass = match f {
                    FilterV => self.half_v(&o, &want)?,
                    FilterH => self.half_h(&o, &want)?,
                    Filter => self.truth(Some(&o), &want)?,
                    _ => !self.truth(Some(&o), &want)?,
                };
                if !pass {
                    return Err(NoAnswerReason::FilterTerminated);
                }
                self.pass_through(&a[0], o)
            }
            VerifyF => StepValue::Truth(self.truth(None, &self.text(&a[0])?)?),
            Verify => {
                let o = self.object(&a[0])?;
                StepValue::Truth(self.truth(Some(&o), &self.text(&a[1])?)?)
            }
            VerifyRel | VerifyRelInv => {
                let props = self.relate(&a[0], &self.text(&a[1])?, f == VerifyRel)?;
                let name = self.text(&a[2])?;
                StepValue::Truth(masks::relate_name(&props, &name, self.ex.hypernyms).is_some())
            }
            ChooseV | ChooseH => {
                let o = self.object(&a[0])?;
                let actual = if f == ChooseV { self.vertical(&o) } else { self.horizontal(&o) };
                if a.len() == 1 {
                    return Ok(Flow::Stop(actual.to_string()));
                }
                for c in &a[1..] {
                    let c = self.text(c)?;
                    if c.eq_ignore_ascii_case(actual) {
                        return Ok(Flow::Stop(c));
                    }
                }
                return Err(NoAnswerReason::BadProgram);
            }
            ChooseF => {
                let cands = [self.text(&a[0])?, self.text(&a[1])?];
                let sentences = cands.iter().map(|c| self.affirmative(IMAGE_LABEL, c)).collect();
                let i = argmax(&self.score(None, sentences)?).expect("two sentences");
                return Ok(Flow::Stop(cands[i].clone()));
            }
            ChooseSubj => {
                let objs = [self.object(&a[0])?, self.object(&a[1])?];
                let attr = self.text(&a[2])?;
                let mut scores = Vec::with_capacity(2);
                for o in &objs {
                    let s = self.score(Some(o), vec![self.affirmative(&o.label, &attr)])?;
                    scores.push(s[0]);
                }
                let i = argmax(&scores).expect("two objects");
                return Ok(Flow::Stop(objs[i].label.clone()));
            }
            ChooseAttr => {
                let o = self.object(&a[0])?;
                let ty = self.text(&a[1])?;
                let cands = [self.text(&a[2])?, self.text(&a[3])?];
                let sentences = match self.ex.dictionary.get(&ty) {
                    Some(_) => self
                        .ex
                        .dictionary
                        .build_sentences(&o.label, &ty, &cands)
                        .map_err(|_| NoAnswerReason::BadProgram)?,
                    None => cands.iter().map(|c| format!("The {} is {c}", o.label)).collect(),
                };
                let i = argmax(&self.score(Some(&o), sentences)?).expect("two sentences");
                return Ok(Flow::Stop(cands[i].clone()));
            }
            ChooseRelInv => {
                let anchor = self.object(&a[0])?;
                let name = self.text(&a[1])?;
                let rels = [self.text(&a[2])?, self.text(&a[3])?];
                let target = self.named_other(&name, &anchor.object_id)?;
                let loc = self.ex.memory.locate_instance(target);
                let mut scores = Vec::with_capacity(2);
                for r in &rels {
                    let mask = self.ex.masks.mask_for(r, false).map_err(mask_reason)?;
                    let pose = anchor_pose(&anchor.pose);
                    let region = Region::build(&mask, &pose, self.ex.memory.space()).map_err(mask_reason)?;
                    scores.push(region.score_point(self.ex.memory.space(), loc.x, loc.y));
                }
                let i = argmax(&scores).expect("two relations");
                return Ok(Flow::Stop(rels[i].clone()));
            }
            QueryN => return Ok(Flow::Stop(self.object(&a[0])?.label)),
            QueryV => return Ok(Flow::Stop(self.vertical(&self.object(&a[0])?).into())),
            QueryH => return Ok(Flow::Stop(self.horizontal(&self.object(&a[0])?).into())),
            Query => {
                let o = self.object(&a[0])?;
                return Ok(Flow::Stop(self.query(Some(&o), &self.text(&a[1])?)?));
            }
            QueryF => return Ok(Flow::Stop(self.query(None, &self.text(&a[0])?)?)),
            Exist => StepValue::Truth(match &a[0] {
                Arg::Ref(k) => !matches!(self.values[*k], StepValue::NoResult(_)),
                Arg::Text(t) => self.select(t).is_ok(),
            }),
            And | Or => {
                let (x, y) = (self.truthy(&a[0])?, self.truthy(&a[1])?);
                StepValue::Truth(if f == And { x && y } else { x || y })
            }
            Common | Different | Same => unreachable!("rejected as unsupported"),
        };
        Ok(Flow::Continue(value))
    }

    fn text(&self, arg: &Arg) -> Step<String> {
        match arg {
            Arg::Text(t) => Ok(masks::normalize_term(t)),
            Arg::Ref(k) => match &self.values[*k] {
                StepValue::Position(o) => Ok(o.label.clone()),
                StepValue::Proposal(p) => Ok(p.label.clone()),
                StepValue::Answer(a) => Ok(a.clone()),
                StepValue::NoResult(r) => Err(*r),
                StepValue::Truth(_) => Err(NoAnswerReason::BadProgram),
            },
        }
    }

    fn select(&self, name: &str) -> Step<ObjectValue> {
        let key = masks::normalize_term(name);
        let label = self.ex.config.label_merges.get(&key).cloned().unwrap_or(key);
        let sel = self
            .ex
            .memory
            .select(&label, self.ex.config.select)
            .ok_or(NoAnswerReason::SelectFailed)?;
        Ok(ObjectValue {
            object_id: sel.object_id,
            label: sel.label,
            pose: sel.result.pose,
            score: sel.result.score,
        })
    }

    /// The object an argument refers to. Literal names are selected.
    fn object(&self, arg: &Arg) -> Step<ObjectValue> {
        match arg {
            Arg::Text(t) => self.select(t),
            Arg::Ref(k) => match &self.values[*k] {
                StepValue::Position(o) => Ok(o.clone()),
                StepValue::Proposal(p) => Ok(p.into()),
                StepValue::NoResult(r) => Err(*r),
                StepValue::Truth(_) | StepValue::Answer(_) => Err(NoAnswerReason::BadProgram),
            },
        }
    }

    fn pass_through(&self, arg: &Arg, o: ObjectValue) -> StepValue {
        match arg {
            Arg::Ref(k) => self.values[*k].clone(),
            Arg::Text(_) => StepValue::Position(o),
        }
    }

    fn truthy(&self, arg: &Arg) -> Step<bool> {
        match arg {
            Arg::Ref(k) => match &self.values[*k] {
                StepValue::Truth(b) => Ok(*b),
                StepValue::Position(_) | StepValue::Proposal(_) => Ok(true),
                StepValue::NoResult(_) => Ok(false),
                StepValue::Answer(_) => Err(NoAnswerReason::BadProgram),
            },
            Arg::Text(t) => Ok(self.select(t).is_ok()),
        }
    }

    /// `inverse = true` queries `{X : ref rel X}`, else `{X : X rel ref}`.
    fn relate(&self, anchor: &Arg, relation: &str, inverse: bool) -> Step<Vec<Proposal>> {
        let o = self.object(anchor)?;
        let anchor = Anchor {
            object_id: o.object_id,
            label: o.label,
            pose: o.pose,
        };
        masks::relate_from(self.ex.memory, &anchor, relation, self.ex.masks, inverse, &self.ex.config.relate)
            .map_err(mask_reason)
    }

    /// Instance named `name` (or of that class) other than `exclude`.
    fn named_other(&self, name: &str, exclude: &str) -> Step<&crate::scene::VocabEntry> {
        let entries = self.ex.memory.entries().iter().filter(|e| e.object_id != exclude);
        let exact: Vec<_> = entries.clone().filter(|e| masks::normalize_term(&e.label) == name).collect();
        let pool = if exact.is_empty() {
            entries.filter(|e| self.ex.hypernyms.matches(&e.label, name)).collect()
        } else {
            exact
        };
        pool.into_iter()
            .map(|e| (self.ex.memory.decode_instance(e, self.ex.config.select).score, e))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, e)| e)
            .ok_or(NoAnswerReason::SelectFailed)
    }

    fn midlines(&self) -> (f64, f64) {
        let (w, h) = self.ex.memory.image().grid_extent();
        (w / 2.0, h / 2.0)
    }

    fn vertical(&self, o: &ObjectValue) -> &'static str {
        if o.pose.center().1 < self.midlines().1 {
            "top"
        } else {
            "bottom"
        }
    }

    fn horizontal(&self, o: &ObjectValue) -> &'static str {
        if o.pose.center().0 < self.midlines().0 {
            "left"
        } else {
            "right"
        }
    }

    fn half_v(&self, o: &ObjectValue, want: &str) -> Step<bool> {
        match want {
            "top" | "bottom" => Ok(self.vertical(o) == want),
            _ => Err(NoAnswerReason::BadProgram),
        }
    }

    fn half_h(&self, o: &ObjectValue, want: &str) -> Step<bool> {
        match want {
            "left" | "right" => Ok(self.horizontal(o) == want),
            _ => Err(NoAnswerReason::BadProgram),
        }
    }

    fn pixel_box(&self, pose: &GridPose) -> [f64; 4] {
        let s = self.ex.memory.scale();
        [pose.x / s, pose.y / s, pose.w * WH_SCALE / s, pose.h * WH_SCALE / s]
    }

    fn score(&self, object: Option<&ObjectValue>, sentences: Vec<String>) -> Step<Vec<f64>> {
        let req = ScoreRequest {
            image: self.ex.image_ref.clone(),
            bbox: object.map(|o| self.pixel_box(&o.pose)),
            sentences,
        };
        let key = serde_json::to_string(&req).expect("requests serialize");
        if let Some(s) = self.memo.borrow().get(&key) {
            return Ok(s.clone());
        }
        let resp = self.ex.oracle.score(&req).map_err(|e| {
            log::debug!("oracle failed: {e}");
            NoAnswerReason::OracleUnavailable
        })?;
        self.memo.borrow_mut().insert(key, resp.scores.clone());
        Ok(resp.scores)
    }

    fn affirmative(&self, label: &str, value: &str) -> String {
        match self.ex.dictionary.type_of(value) {
            Some(t) => self.ex.dictionary.sentence(label, t, value).expect("type exists"),
            None => AttributeDictionary::negation_pair(label, value)[0].clone(),
        }
    }

    /// Whether `value` holds: its sentence must outscore every other value
    /// of its type, or its own negation when the value has no type.
    fn truth(&self, object: Option<&ObjectValue>, value: &str) -> Step<bool> {
        let label = object.map_or(IMAGE_LABEL, |o| o.label.as_str());
        let dict = self.ex.dictionary;
        let (sentences, target) = match dict.type_of(value) {
            Some(t) => {
                let values = &dict.get(t).expect("type exists").values;
                let target = values.iter().position(|v| *v == masks::normalize_term(value)).expect("listed");
                (dict.build_sentences(label, t, values).expect("type exists"), target)
            }
            None => (AttributeDictionary::negation_pair(label, value).to_vec(), 0),
        };
        let scores = self.score(object, sentences)?;
        let rest = scores
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != target)
            .map(|(_, &s)| s)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(scores[target] > rest)
    }

    fn query(&self, object: Option<&ObjectValue>, ty: &str) -> Step<String> {
        let label = object.map_or(IMAGE_LABEL, |o| o.label.as_str());
        let t = self.ex.dictionary.get(ty).ok_or(NoAnswerReason::BadProgram)?;
        let sentences = self
            .ex
            .dictionary
            .build_sentences(label, ty, &t.values)
            .map_err(|_| NoAnswerReason::BadProgram)?;
        let i = argmax(&self.score(object, sentences)?).expect("non-empty type");
        Ok(t.values[i].clone())
    }
}

fn anchor_pose(p: &GridPose) -> GridPose {
    GridPose {
        w: p.w.max(masks::MIN_ANCHOR_SIZE),
        h: p.h.max(masks::MIN_ANCHOR_SIZE),
        ..*p
    }
}
