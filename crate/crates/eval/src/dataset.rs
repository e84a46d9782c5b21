//! Joined scene graphs and question programs.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ssp_core::program::{parse_program, Program, StepRecord};
use ssp_core::scene::{load_scene_graphs, SceneError, SceneGraph};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("scene graphs: {0}")]
    Scene(#[from] SceneError),
    #[error("{0}")]
    Schema(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One question with its program and gold answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub question_id: String,
    pub image_id: String,
    pub question: String,
    pub program: Program,
    pub answer: String,
}

#[derive(Deserialize)]
struct RawQuestion {
    question_id: serde_json::Value,
    image_id: serde_json::Value,
    #[serde(default)]
    question: String,
    program: RawProgram,
    #[serde(default)]
    answer: String,
}

/// A program as a step array or as text.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawProgram {
    Steps(Vec<StepRecord>),
    Text(String),
}

fn id_string(v: serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

impl RawQuestion {
    fn into_question(self) -> Option<Question> {
        Some(Question {
            question_id: id_string(self.question_id)?,
            image_id: id_string(self.image_id)?,
            question: self.question,
            program: match self.program {
                RawProgram::Steps(steps) => Program::from_records(steps).ok()?,
                RawProgram::Text(text) => parse_program(&text).ok()?,
            },
            answer: self.answer,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub lines: usize,
    pub joined: usize,
    pub malformed: usize,
    pub missing_image: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub scenes: BTreeMap<String, SceneGraph>,
    pub questions: Vec<Question>,
}

impl Dataset {
    pub fn new(scenes: Vec<SceneGraph>, questions: Vec<Question>) -> Self {
        Self {
            scenes: scenes.into_iter().map(|s| (s.image_id.clone(), s)).collect(),
            questions,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    /// Questions grouped by image, in image id order.
    pub fn by_image(&self) -> BTreeMap<&str, Vec<&Question>> {
        let mut out: BTreeMap<&str, Vec<&Question>> = BTreeMap::new();
        for q in &self.questions {
            out.entry(q.image_id.as_str()).or_default().push(q);
        }
        out
    }

    /// A seeded uniform sample of at most `n` questions, in original order.
    pub fn subset(&self, n: usize, seed: u64) -> Dataset {
        use rand::seq::index::sample;
        use rand::SeedableRng;
        if n >= self.questions.len() {
            return self.clone();
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, self.questions.len(), n).into_vec();
        idx.sort_unstable();
        let questions: Vec<Question> = idx.into_iter().map(|i| self.questions[i].clone()).collect();
        let scenes = questions
            .iter()
            .filter_map(|q| self.scenes.get(&q.image_id).map(|s| (q.image_id.clone(), s.clone())))
            .collect();
        Dataset { scenes, questions }
    }
}

/// Parses question records from JSON Lines. Blank lines are ignored;
/// unparsable records are counted as malformed.
pub fn parse_questions(reader: impl BufRead) -> Result<(Vec<Question>, IngestStats), std::io::Error> {
    let mut stats = IngestStats::default();
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        stats.lines += 1;
        match serde_json::from_str::<RawQuestion>(&line).ok().and_then(RawQuestion::into_question) {
            Some(q) => out.push(q),
            None => stats.malformed += 1,
        }
    }
    Ok((out, stats))
}

/// Loads scene graphs and JSON Lines programs and joins them on image id.
/// Questions whose image has no scene graph are skipped and counted.
pub fn ingest_gqa(scene_graph_path: &Path, programs_path: &Path) -> Result<(Dataset, IngestStats), DataError> {
    let scenes = load_scene_graphs(scene_graph_path)?;
    let file = std::fs::File::open(programs_path).map_err(io_err(programs_path))?;
    let (questions, mut stats) = parse_questions(BufReader::new(file)).map_err(io_err(programs_path))?;
    let scenes: BTreeMap<String, SceneGraph> = scenes.into_iter().map(|s| (s.image_id.clone(), s)).collect();
    let (joined, missing): (Vec<_>, Vec<_>) = questions.into_iter().partition(|q| scenes.contains_key(&q.image_id));
    stats.missing_image = missing.len();
    stats.joined = joined.len();
    if stats.malformed + stats.missing_image > 0 {
        log::warn!(
            "skipped {} malformed records and {} questions without a scene graph",
            stats.malformed,
            stats.missing_image
        );
    }
    Ok((
        Dataset {
            scenes,
            questions: joined,
        },
        stats,
    ))
}

pub fn write_questions(path: &Path, questions: &[Question]) -> Result<(), DataError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    for q in questions {
        let line = serde_json::to_string(q).map_err(|e| DataError::Schema(e.to_string()))?;
        writeln!(f, "{line}").map_err(io_err(path))?;
    }
    f.flush().map_err(io_err(path))
}

/// File names used by [`save_dataset`] and [`load_dataset`].
pub const SCENES_FILE: &str = "scene_graphs.json";
pub const PROGRAMS_FILE: &str = "programs.jsonl";

pub fn save_dataset(dir: &Path, data: &Dataset) -> Result<(), DataError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let scenes: Vec<SceneGraph> = data.scenes.values().cloned().collect();
    ssp_core::scene::save_scene_graphs(&dir.join(SCENES_FILE), &scenes)?;
    write_questions(&dir.join(PROGRAMS_FILE), &data.questions)
}

pub fn load_dataset(dir: &Path) -> Result<(Dataset, IngestStats), DataError> {
    ingest_gqa(&dir.join(SCENES_FILE), &dir.join(PROGRAMS_FILE))
}
