//! Running question programs and aggregating outcomes.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use ssp_core::hrr::RngSeed;
use ssp_core::masks::{normalize_term, HypernymTable, MaskLibrary};
use ssp_core::oracle::{AttributeDictionary, AttributeOracle};
use ssp_core::program::{Arg, ExecutorConfig, Executor, Function, NoAnswerReason, Outcome, Program};
use ssp_core::scene::{AxisConfig, SSPMemory, SspSpace};
use ssp_core::stats::{correlation_test, StatsError};

use crate::capacity::CapacityRow;
use crate::dataset::{Dataset, Question};

/// Question type by the modules its program uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    /// Uses relation functions and no oracle functions.
    Relation,
    /// Uses oracle functions and no relation functions.
    Attribute,
    Both,
    /// Neither, e.g. position-only or existence questions.
    Other,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::Relation, Category::Attribute, Category::Both, Category::Other];

    pub fn name(self) -> &'static str {
        match self {
            Category::Relation => "relation",
            Category::Attribute => "attribute",
            Category::Both => "both",
            Category::Other => "other",
        }
    }
}

pub fn categorize(program: &Program) -> Category {
    let rel = program.functions().any(Function::uses_relation);
    let attr = program.functions().any(Function::uses_oracle);
    match (rel, attr) {
        (true, true) => Category::Both,
        (true, false) => Category::Relation,
        (false, true) => Category::Attribute,
        (false, false) => Category::Other,
    }
}

/// Relation arguments of a program, as written.
pub fn program_relations(program: &Program) -> Vec<String> {
    let mut out = Vec::new();
    for s in program.steps() {
        let idx: &[usize] = match s.resolved() {
            Some(Function::Relate | Function::RelateInv | Function::RelateName | Function::RelateInvName) => &[1],
            Some(Function::VerifyRel | Function::VerifyRelInv) => &[1],
            Some(Function::ChooseRelInv) => &[2, 3],
            _ => &[],
        };
        for &i in idx {
            if let Some(Arg::Text(t)) = s.args.get(i) {
                out.push(normalize_term(t));
            }
        }
    }
    out
}

pub fn answers_match(predicted: &str, gold: &str) -> bool {
    normalize_term(predicted) == normalize_term(gold)
}

/// Shared read-only inputs of an evaluation.
pub struct EvalResources<'a> {
    pub masks: &'a MaskLibrary,
    pub oracle: &'a dyn AttributeOracle,
    pub dictionary: &'a AttributeDictionary,
    pub hypernyms: &'a HypernymTable,
    /// When set, the oracle receives `<root>/<image_id>.jpg` instead of the
    /// bare image id.
    pub image_root: Option<PathBuf>,
}

impl EvalResources<'_> {
    pub fn image_ref(&self, image_id: &str) -> String {
        match &self.image_root {
            Some(r) => r.join(format!("{image_id}.jpg")).display().to_string(),
            None => image_id.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryConfig {
    pub d: usize,
    pub axes: AxisConfig,
    pub executor: ExecutorConfig,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        Self {
            d: ssp_core::hrr::DEFAULT_DIM,
            axes: AxisConfig::default(),
            executor: ExecutorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionOutcome {
    pub question_id: String,
    pub category: Category,
    pub uses_select: bool,
    pub answer: Option<String>,
    pub no_answer: Option<NoAnswerReason>,
    pub correct: bool,
    pub relations: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub total: usize,
    pub correct: usize,
    /// Wrong answers that were given.
    pub wrong: usize,
    pub no_answer: usize,
    pub no_answer_reasons: BTreeMap<NoAnswerReason, usize>,
}

impl CategoryCounts {
    fn add(&mut self, o: &QuestionOutcome) {
        self.total += 1;
        if o.correct {
            self.correct += 1;
        } else if let Some(r) = o.no_answer {
            self.no_answer += 1;
            *self.no_answer_reasons.entry(r).or_default() += 1;
        } else {
            self.wrong += 1;
        }
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.correct, self.total)
    }

    pub fn no_answer_rate(&self) -> f64 {
        ratio(self.no_answer, self.total)
    }

    pub fn is_consistent(&self) -> bool {
        self.correct + self.wrong + self.no_answer == self.total
            && self.no_answer_reasons.values().sum::<usize>() == self.no_answer
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub overall: CategoryCounts,
    pub categories: BTreeMap<Category, CategoryCounts>,
    /// Questions whose program contains `select`; overlaps the categories.
    pub with_select: CategoryCounts,
    pub outcomes: Vec<QuestionOutcome>,
}

impl SeedReport {
    pub fn from_outcomes(seed: u64, outcomes: Vec<QuestionOutcome>) -> Self {
        let mut overall = CategoryCounts::default();
        let mut categories: BTreeMap<Category, CategoryCounts> =
            Category::ALL.iter().map(|&c| (c, CategoryCounts::default())).collect();
        let mut with_select = CategoryCounts::default();
        for o in &outcomes {
            overall.add(o);
            categories.get_mut(&o.category).expect("all categories").add(o);
            if o.uses_select {
                with_select.add(o);
            }
        }
        Self {
            seed,
            overall,
            categories,
            with_select,
            outcomes,
        }
    }

    pub fn accuracy(&self) -> f64 {
        self.overall.accuracy()
    }

    /// Category totals sum to the question count and every category's
    /// correct, wrong and no-answer counts sum to its total.
    pub fn partition_holds(&self) -> bool {
        let sum = |f: fn(&CategoryCounts) -> usize| self.categories.values().map(f).sum::<usize>();
        sum(|c| c.total) == self.outcomes.len()
            && sum(|c| c.correct) == self.overall.correct
            && sum(|c| c.wrong) == self.overall.wrong
            && sum(|c| c.no_answer) == self.overall.no_answer
            && self.overall.is_consistent()
            && self.categories.values().all(CategoryCounts::is_consistent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation; the deviation of a single value
    /// is 0.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySummary {
    pub questions: usize,
    pub share: f64,
    pub accuracy: MeanStd,
    pub no_answer_rate: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationStat {
    pub relation: String,
    pub mask_cells: usize,
    pub questions: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskCorrelation {
    pub r: f64,
    /// One-sided p-value against a negative correlation.
    pub p_one_sided: f64,
    pub relations: Vec<RelationStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
pub enum CorrelationIssue {
    #[error("only {0} relations with questions, at least 3 needed")]
    TooFewRelations(usize),
    #[error("accuracy or mask size has zero variance")]
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub questions: usize,
    pub d: usize,
    pub accuracy: MeanStd,
    pub categories: BTreeMap<Category, CategorySummary>,
    pub per_seed: Vec<SeedReport>,
    #[serde(default)]
    pub capacity: Vec<CapacityRow>,
    #[serde(default)]
    pub mask_correlation: Option<Result<MaskCorrelation, CorrelationIssue>>,
}

impl EvalReport {
    pub fn from_seeds(d: usize, per_seed: Vec<SeedReport>) -> Self {
        let questions = per_seed.first().map_or(0, |s| s.outcomes.len());
        let accs: Vec<f64> = per_seed.iter().map(SeedReport::accuracy).collect();
        let categories = Category::ALL
            .iter()
            .map(|&c| {
                let counts: Vec<&CategoryCounts> = per_seed.iter().map(|s| &s.categories[&c]).collect();
                let n = counts.first().map_or(0, |k| k.total);
                let acc: Vec<f64> = counts.iter().map(|k| k.accuracy()).collect();
                let na: Vec<f64> = counts.iter().map(|k| k.no_answer_rate()).collect();
                (
                    c,
                    CategorySummary {
                        questions: n,
                        share: ratio(n, questions),
                        accuracy: MeanStd::of(&acc),
                        no_answer_rate: MeanStd::of(&na),
                    },
                )
            })
            .collect();
        Self {
            questions,
            d,
            accuracy: MeanStd::of(&accs),
            categories,
            per_seed,
            capacity: Vec::new(),
            mask_correlation: None,
        }
    }

    pub fn partition_holds(&self) -> bool {
        self.per_seed.iter().all(SeedReport::partition_holds)
            && self.categories.values().map(|c| c.questions).sum::<usize>() == self.questions
    }
}

/// Runs one question against an encoded image.
pub fn run_question(exec: Option<&Executor<'_>>, q: &Question) -> QuestionOutcome {
    let (answer, no_answer) = match exec {
        Some(e) => {
            let trace = e.execute(&q.program);
            match trace.outcome {
                Outcome::Answer(a) => (Some(a), None),
                Outcome::NoAnswer(r) => (None, Some(r)),
            }
        }
        None => (None, Some(NoAnswerReason::SelectFailed)),
    };
    QuestionOutcome {
        question_id: q.question_id.clone(),
        category: categorize(&q.program),
        uses_select: q.program.functions().any(|f| f == Function::Select),
        correct: answer.as_deref().is_some_and(|a| answers_match(a, &q.answer)),
        answer,
        no_answer,
        relations: program_relations(&q.program),
    }
}

/// Executes every question under one seed.
pub fn run_seed(data: &Dataset, cfg: &MemoryConfig, res: &EvalResources<'_>, seed: u64) -> SeedReport {
    let space = SspSpace::new(cfg.d, RngSeed(seed), cfg.axes).expect("valid memory configuration");
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, q) in data.questions.iter().enumerate() {
        groups.entry(q.image_id.as_str()).or_default().push(i);
    }
    let groups: Vec<(&str, Vec<usize>)> = groups.into_iter().collect();
    let mut outcomes: Vec<(usize, QuestionOutcome)> = groups
        .par_iter()
        .flat_map_iter(|(image_id, idx)| {
            let memory = data.scenes.get(*image_id).and_then(|g| {
                let (objects, dropped) = g.valid_scene_objects();
                if dropped > 0 {
                    log::debug!("{image_id}: dropped {dropped} invalid objects");
                }
                SSPMemory::encode(&objects, g.image().ok()?, space.clone()).ok()
            });
            let exec = memory.as_ref().map(|m| {
                Executor::new(m, res.masks, res.oracle, res.dictionary, res.hypernyms, res.image_ref(image_id))
                    .with_config(cfg.executor.clone())
            });
            idx.iter()
                .map(|&i| (i, run_question(exec.as_ref(), &data.questions[i])))
                .collect::<Vec<_>>()
        })
        .collect();
    outcomes.sort_by_key(|(i, _)| *i);
    SeedReport::from_outcomes(seed, outcomes.into_iter().map(|(_, o)| o).collect())
}

pub fn run_eval(data: &Dataset, cfg: &MemoryConfig, res: &EvalResources<'_>, seeds: &[u64]) -> EvalReport {
    let per_seed = seeds.iter().map(|&s| run_seed(data, cfg, res, s)).collect();
    let mut report = EvalReport::from_seeds(cfg.d, per_seed);
    report.mask_correlation = Some(mask_size_correlation(&report, res.masks));
    report
}

/// Per-relation accuracy, pooled over seeds, for relations with a mask.
pub fn relation_stats(report: &EvalReport, lib: &MaskLibrary) -> Vec<RelationStat> {
    let mut acc: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for s in &report.per_seed {
        for o in &s.outcomes {
            let mut rels: Vec<&str> = o.relations.iter().filter_map(|r| lib.canonical(r)).collect();
            rels.sort_unstable();
            rels.dedup();
            for r in rels {
                let e = acc.entry(r.to_string()).or_default();
                e.0 += o.correct as usize;
                e.1 += 1;
            }
        }
    }
    let seeds = report.per_seed.len().max(1);
    acc.into_iter()
        .map(|(relation, (c, n))| RelationStat {
            mask_cells: lib.get(&relation).map_or(0, |m| m.active_count()),
            questions: n / seeds,
            accuracy: ratio(c, n),
            relation,
        })
        .collect()
}

/// Pearson correlation between per-relation accuracy and mask size.
pub fn mask_size_correlation(report: &EvalReport, lib: &MaskLibrary) -> Result<MaskCorrelation, CorrelationIssue> {
    let relations = relation_stats(report, lib);
    if relations.len() < 3 {
        return Err(CorrelationIssue::TooFewRelations(relations.len()));
    }
    let x: Vec<f64> = relations.iter().map(|r| r.mask_cells as f64).collect();
    let y: Vec<f64> = relations.iter().map(|r| r.accuracy).collect();
    match correlation_test(&x, &y) {
        Ok(c) => Ok(MaskCorrelation {
            r: c.r,
            p_one_sided: c.p_lower,
            relations,
        }),
        Err(StatsError::TooFew(n)) => Err(CorrelationIssue::TooFewRelations(n)),
        Err(_) => Err(CorrelationIssue::Degenerate),
    }
}
