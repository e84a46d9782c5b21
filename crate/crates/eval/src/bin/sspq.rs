//! Command line interface: encode scenes, query memories, learn masks, run
//! programs and evaluate.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use ssp_core::hrr::{RngSeed, DEFAULT_DIM};
use ssp_core::masks::{learn_masks, HypernymTable, MaskLibrary, DEFAULT_MIN_SAMPLES, DEFAULT_THRESHOLD};
use ssp_core::oracle::{AttributeDictionary, AttributeOracle, HttpOracle, MockOracle};
use ssp_core::program::Executor;
use ssp_core::scene::{
    load_scene_graphs, store::{load_memories, save_memories}, AxisConfig, DecodeStrategy, SSPMemory, SceneGraph, SspSpace,
};
use ssp_eval::capacity::{capacity_analysis, CapacityOptions};
use ssp_eval::dataset::{load_dataset, parse_questions, save_dataset, Dataset};
use ssp_eval::evaluate::{relation_stats, run_eval, EvalResources, MemoryConfig};
use ssp_eval::output::{capacity_csv, categories_csv, heatmap_pgm, mask_pgm, outcomes_csv, write_json};
use ssp_eval::suite::{build_suite, shelf_scene, train_masks, SuiteConfig, DEFAULT_CORPUS_SCENES};
use ssp_eval::synth::{generate_scenes, SyntheticSceneSpec};

/// Environment variable holding the default oracle (`mock` or a URL).
const ORACLE_ENV: &str = "SSPQ_ORACLE";

#[derive(Parser)]
#[command(name = "sspq", version, about = "Spatial semantic pointer scene memories and question answering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axes {
    /// Band-limited planar position axes.
    Default,
    /// Phases uniform on the circle for all four axes.
    Uniform,
}

impl Axes {
    fn config(self) -> AxisConfig {
        match self {
            Axes::Default => AxisConfig::default(),
            Axes::Uniform => AxisConfig::uniform(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Exhaustive,
    TwoStage,
}

impl Strategy {
    fn decode(self) -> DecodeStrategy {
        match self {
            Strategy::Exhaustive => DecodeStrategy::Exhaustive,
            Strategy::TwoStage => DecodeStrategy::two_stage(),
        }
    }
}

#[derive(clap::Args)]
struct OracleArgs {
    /// `mock` or the base URL of a scoring server.
    #[arg(long, env = ORACLE_ENV, default_value = "mock")]
    oracle: String,
    /// Attribute dictionary JSON; the bundled one by default.
    #[arg(long)]
    attributes: Option<PathBuf>,
    /// Label-to-class table; the bundled one by default.
    #[arg(long)]
    hypernyms: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Encode scene graphs into a memory bundle.
    Encode {
        #[arg(long)]
        scene_graphs: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DIM)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Axes::Default)]
        axes: Axes,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode the pose of a label from an encoded memory.
    Select {
        #[arg(long)]
        memory: PathBuf,
        #[arg(long)]
        label: String,
        /// Image id within the bundle; required when it holds several.
        #[arg(long)]
        image: Option<String>,
        #[arg(long, value_enum, default_value_t = Strategy::Exhaustive)]
        strategy: Strategy,
        /// Write the (x, y) similarity heatmap as PGM.
        #[arg(long)]
        heatmap: Option<PathBuf>,
    },
    /// Learn relation masks from annotated scene graphs.
    LearnMasks {
        #[arg(long)]
        scene_graphs: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_SAMPLES)]
        min_samples: usize,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write each mask as PGM.
        #[arg(long)]
        pgm: bool,
    },
    /// Execute programs against encoded memories.
    RunProgram {
        #[arg(long)]
        memory: PathBuf,
        #[arg(long)]
        masks: PathBuf,
        /// Question records as JSON Lines (program as text or step array).
        #[arg(long)]
        programs: PathBuf,
        /// Scene graphs backing the mock oracle.
        #[arg(long)]
        scene_graphs: Option<PathBuf>,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Decoding accuracy against dimension.
    Capacity {
        #[arg(long, value_delimiter = ',', default_values_t = [512usize, 1024, 2048])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        /// Synthetic scenes to generate when no scene graphs are given.
        #[arg(long, default_value_t = 200)]
        scenes: usize,
        #[arg(long)]
        scene_graphs: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Axes::Default)]
        axes: Axes,
        #[arg(long, value_enum, default_value_t = Strategy::Exhaustive)]
        strategy: Strategy,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evaluate a dataset directory end to end.
    Eval {
        /// Directory with scene_graphs.json and programs.jsonl.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        masks: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DIM)]
        dim: usize,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        /// Evaluate a seeded uniform sample of this many questions.
        #[arg(long)]
        subset: Option<usize>,
        /// Send `<root>/<image_id>.jpg` to the oracle instead of the id.
        #[arg(long)]
        image_root: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Directory for CSV tables.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Write the synthetic question suite and masks learned for it.
    SynthSuite {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        questions: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

/// Invalid invocation detected after argument parsing; exits with status 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn seeds(n: u64) -> Vec<u64> {
    (0..n).collect()
}

fn scenes_from(path: &Path) -> anyhow::Result<Vec<SceneGraph>> {
    load_scene_graphs(path).with_context(|| format!("reading {}", path.display()))
}

fn oracle(spec: &str, graphs: Option<&[SceneGraph]>) -> anyhow::Result<Box<dyn AttributeOracle>> {
    if spec == "mock" {
        let graphs = graphs.ok_or_else(|| usage("the mock oracle needs scene graphs"))?;
        Ok(Box::new(MockOracle::from_graphs(graphs)))
    } else if spec.starts_with("http://") || spec.starts_with("https://") {
        let client = HttpOracle::new(spec)?;
        if let Err(e) = client.health() {
            log::warn!("oracle health check failed: {e}");
        }
        Ok(Box::new(client))
    } else {
        Err(usage(format!("--oracle must be `mock` or an http(s) URL, got `{spec}`")))
    }
}

fn tables(args: &OracleArgs) -> anyhow::Result<(AttributeDictionary, HypernymTable)> {
    let dict = match &args.attributes {
        Some(p) => AttributeDictionary::load(p)?,
        None => AttributeDictionary::bundled(),
    };
    let hyp = match &args.hypernyms {
        Some(p) => HypernymTable::load(p)?,
        None => HypernymTable::bundled(),
    };
    Ok((dict, hyp))
}

fn load_masks(dir: &Path) -> anyhow::Result<MaskLibrary> {
    MaskLibrary::load_dir(dir).with_context(|| format!("loading masks from {}", dir.display()))
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string(v).expect("serializable"));
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Encode { scene_graphs, dim, seed, axes, out } => {
            let graphs = scenes_from(&scene_graphs)?;
            let space = SspSpace::new(dim, RngSeed(seed), axes.config()).map_err(|e| usage(e.to_string()))?;
            let mut memories = Vec::new();
            let mut dropped_total = 0;
            for g in &graphs {
                let (objects, dropped) = g.valid_scene_objects();
                dropped_total += dropped;
                if objects.is_empty() {
                    log::warn!("{}: no valid objects, skipped", g.image_id);
                    continue;
                }
                let image = g.image().with_context(|| g.image_id.clone())?;
                let mem = SSPMemory::encode(&objects, image, space.clone()).with_context(|| g.image_id.clone())?;
                memories.push((g.image_id.clone(), mem));
            }
            let refs: Vec<(String, &SSPMemory)> = memories.iter().map(|(id, m)| (id.clone(), m)).collect();
            save_memories(&out, &refs).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("encoded {} scenes ({} invalid objects dropped)", memories.len(), dropped_total);
        }
        Command::Select { memory, label, image, strategy, heatmap } => {
            let memories = load_memories(&memory).with_context(|| format!("reading {}", memory.display()))?;
            let (id, mem) = match image {
                Some(id) => memories
                    .iter()
                    .find(|(i, _)| *i == id)
                    .ok_or_else(|| anyhow!("image {id} not in {}", memory.display()))?,
                None if memories.len() == 1 => &memories[0],
                None => return Err(usage("the bundle holds several images; pass --image")),
            };
            let Some(sel) = mem.select(&label, strategy.decode()) else {
                return Err(anyhow!("label {label} not in image {id}"));
            };
            if let Some(path) = heatmap {
                let e = mem.entry(&sel.object_id).expect("selected entry");
                let q = ssp_core::hrr::unbind(mem.m(), &e.sp).expect("same dimension");
                let h = mem.space().grid.location_heatmap(&q).context("heatmap")?;
                heatmap_pgm(&path, &h)?;
            }
            print_json(&serde_json::json!({
                "image": id,
                "object_id": sel.object_id,
                "label": sel.label,
                "pose": sel.result.pose,
                "score": sel.result.score,
            }));
        }
        Command::LearnMasks { scene_graphs, min_samples, threshold, out, pgm } => {
            if !(0.0..=1.0).contains(&threshold) {
                return Err(usage("--threshold must be in [0, 1]"));
            }
            let graphs = scenes_from(&scene_graphs)?;
            let (masks, report) = learn_masks(&graphs, min_samples, threshold);
            for (rel, n) in &report.learned {
                eprintln!("learned {rel}: {n} samples");
            }
            for (rel, n) in &report.skipped {
                eprintln!("skipped {rel}: {n} samples");
            }
            let lib = MaskLibrary::with_default_tables(masks);
            std::fs::create_dir_all(&out).with_context(|| out.display().to_string())?;
            lib.save_dir(&out)?;
            if pgm {
                for m in lib.masks() {
                    let name = m.relation().replace(' ', "_");
                    mask_pgm(&out.join(format!("{name}.pgm")), m)?;
                }
            }
        }
        Command::RunProgram { memory, masks, programs, scene_graphs, oracle: oargs } => {
            let memories = load_memories(&memory).with_context(|| format!("reading {}", memory.display()))?;
            let lib = load_masks(&masks)?;
            let graphs = scene_graphs.as_deref().map(scenes_from).transpose()?;
            let orc = oracle(&oargs.oracle, graphs.as_deref())?;
            let (dict, hyp) = tables(&oargs)?;
            let file = std::fs::File::open(&programs).with_context(|| programs.display().to_string())?;
            let (questions, stats) = parse_questions(std::io::BufReader::new(file))?;
            if stats.malformed > 0 {
                log::warn!("{} malformed program records skipped", stats.malformed);
            }
            for q in &questions {
                let Some((_, mem)) = memories.iter().find(|(id, _)| *id == q.image_id) else {
                    log::warn!("{}: image {} not in the memory bundle", q.question_id, q.image_id);
                    continue;
                };
                let exec = Executor::new(mem, &lib, orc.as_ref(), &dict, &hyp, q.image_id.clone());
                let trace = exec.execute(&q.program);
                print_json(&serde_json::json!({
                    "question_id": q.question_id,
                    "image_id": q.image_id,
                    "program": q.program.to_string(),
                    "outcome": trace.outcome,
                    "values": trace.values,
                }));
            }
        }
        Command::Capacity { dims, seeds: n, scenes, scene_graphs, axes, strategy, csv, json } => {
            if dims.is_empty() || n == 0 {
                return Err(usage("need at least one dimension and one seed"));
            }
            let graphs = match scene_graphs {
                Some(p) => scenes_from(&p)?,
                None => generate_scenes(&SyntheticSceneSpec::capacity(scenes, RngSeed(17)))?,
            };
            let opts = CapacityOptions {
                axes: axes.config(),
                strategy: strategy.decode(),
            };
            let rows = capacity_analysis(&dims, &graphs, &seeds(n), &opts, None);
            println!("{:>6} {:>9} {:>14} {:>14} {:>14} {:>14}", "d", "instances", "mse_xy", "iou", "items%", "select%");
            for r in &rows {
                println!(
                    "{:>6} {:>9} {:>7.2}±{:<6.2} {:>7.3}±{:<6.3} {:>7.2}±{:<6.2} {:>7.2}±{:<6.2}",
                    r.d,
                    r.instances,
                    r.mse_xy.mean,
                    r.mse_xy.std,
                    r.mean_iou.mean,
                    r.mean_iou.std,
                    r.items_pct.mean,
                    r.items_pct.std,
                    r.select_pct_small.mean,
                    r.select_pct_small.std
                );
            }
            if let Some(p) = csv {
                capacity_csv(&p, &rows)?;
            }
            if let Some(p) = json {
                write_json(&p, &rows)?;
            }
        }
        Command::Eval { dataset, masks, dim, seeds: n, subset, image_root, report, csv_dir, oracle: oargs } => {
            if n == 0 {
                return Err(usage("need at least one seed"));
            }
            let (data, stats) = load_dataset(&dataset)?;
            eprintln!(
                "{} question records, {} joined, {} malformed, {} without scene graph",
                stats.lines, stats.joined, stats.malformed, stats.missing_image
            );
            let data: Dataset = match subset {
                Some(k) => data.subset(k, 0),
                None => data,
            };
            let lib = load_masks(&masks)?;
            let graphs: Vec<SceneGraph> = data.scenes.values().cloned().collect();
            let orc = oracle(&oargs.oracle, Some(&graphs))?;
            let (dict, hyp) = tables(&oargs)?;
            let res = EvalResources {
                masks: &lib,
                oracle: orc.as_ref(),
                dictionary: &dict,
                hypernyms: &hyp,
                image_root,
            };
            let cfg = MemoryConfig { d: dim, ..MemoryConfig::default() };
            let rep = run_eval(&data, &cfg, &res, &seeds(n));
            println!("questions {}  accuracy {:.4} ± {:.4}", rep.questions, rep.accuracy.mean, rep.accuracy.std);
            for (c, s) in &rep.categories {
                println!(
                    "  {:<10} {:>6} ({:>5.1}%)  accuracy {:.4}  no answer {:.4}",
                    c.name(),
                    s.questions,
                    100.0 * s.share,
                    s.accuracy.mean,
                    s.no_answer_rate.mean
                );
            }
            for r in relation_stats(&rep, &lib) {
                println!("  relation {:<18} cells {:>6} questions {:>5} accuracy {:.4}", r.relation, r.mask_cells, r.questions, r.accuracy);
            }
            write_json(&report, &rep)?;
            if let Some(dir) = csv_dir {
                std::fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
                categories_csv(&dir.join("categories.csv"), &rep)?;
                outcomes_csv(&dir.join("outcomes.csv"), &rep)?;
            }
        }
        Command::SynthSuite { out, questions, seed } => {
            let (lib, report) = train_masks(DEFAULT_CORPUS_SCENES, RngSeed(7));
            for (rel, n) in &report.learned {
                eprintln!("learned {rel}: {n} samples");
            }
            let dict = AttributeDictionary::bundled();
            let cfg = SuiteConfig { questions, seed: RngSeed(seed), ..SuiteConfig::default() };
            let mut data = build_suite(&cfg, &lib, &dict);
            let (g, q) = shelf_scene();
            data.scenes.insert(g.image_id.clone(), g);
            data.questions.push(q);
            save_dataset(&out, &data)?;
            let mask_dir = out.join("masks");
            std::fs::create_dir_all(&mask_dir).with_context(|| mask_dir.display().to_string())?;
            lib.save_dir(&mask_dir)?;
            eprintln!("wrote {} questions over {} scenes to {}", data.questions.len(), data.scenes.len(), out.display());
        }
    }
    Ok(())
}

/// Joins the error chain, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}
