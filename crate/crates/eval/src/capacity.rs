//! Decoding accuracy against dimension.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use ssp_core::hrr::RngSeed;
use ssp_core::scene::{instance_outcomes, summarize, AxisConfig, DecodeStrategy, PoseOutcome, SSPMemory, SceneGraph, SspSpace};

use crate::dataset::Dataset;
use crate::evaluate::{run_seed, EvalResources, MeanStd, MemoryConfig};

/// Scenes with at most this many objects count towards `select_pct_small`.
pub const SMALL_SCENE_OBJECTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub d: usize,
    /// Decoded instances per seed.
    pub instances: usize,
    /// Mean squared error of the decoded (x, y), in grid units².
    pub mse_xy: MeanStd,
    pub mean_iou: MeanStd,
    /// Percentage of instances decoded with IoU > 0.5.
    pub items_pct: MeanStd,
    /// Percentage of instances whose (x, y) is within one grid unit, on
    /// scenes with at most [`SMALL_SCENE_OBJECTS`] objects.
    pub select_pct_small: MeanStd,
    /// Question accuracy, when questions were supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityOptions {
    pub axes: AxisConfig,
    pub strategy: DecodeStrategy,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        Self {
            axes: AxisConfig::default(),
            strategy: DecodeStrategy::Exhaustive,
        }
    }
}

/// Decode outcomes of every valid instance, tagged with its scene size.
pub fn decode_outcomes(
    scenes: &[SceneGraph],
    space: &std::sync::Arc<SspSpace>,
    strategy: DecodeStrategy,
) -> Vec<(PoseOutcome, usize)> {
    scenes
        .par_iter()
        .flat_map_iter(|g| {
            let (objects, _) = g.valid_scene_objects();
            let n = objects.len();
            let out = match (g.image(), n) {
                (Ok(image), 1..) => SSPMemory::encode(&objects, image, space.clone())
                    .map(|m| instance_outcomes(&m, strategy))
                    .unwrap_or_default(),
                _ => Vec::new(),
            };
            out.into_iter().map(move |o| (o, n))
        })
        .collect()
}

/// One row per dimension, averaged over seeds.
pub fn capacity_analysis(
    dims: &[usize],
    scenes: &[SceneGraph],
    seeds: &[u64],
    opts: &CapacityOptions,
    questions: Option<(&Dataset, &EvalResources<'_>, &MemoryConfig)>,
) -> Vec<CapacityRow> {
    dims.iter()
        .map(|&d| {
            let mut mse = Vec::new();
            let mut iou = Vec::new();
            let mut items = Vec::new();
            let mut sel = Vec::new();
            let mut acc = Vec::new();
            let mut instances = 0;
            for &seed in seeds {
                let space = SspSpace::new(d, RngSeed(seed), opts.axes).expect("valid dimension");
                let outs = decode_outcomes(scenes, &space, opts.strategy);
                instances = outs.len();
                let all: Vec<PoseOutcome> = outs.iter().map(|o| o.0).collect();
                if let Ok(m) = summarize(&all) {
                    mse.push(m.mse_xy);
                    iou.push(m.mean_iou);
                    items.push(m.items_pct);
                }
                let small: Vec<&PoseOutcome> =
                    outs.iter().filter(|o| o.1 <= SMALL_SCENE_OBJECTS).map(|o| &o.0).collect();
                if !small.is_empty() {
                    sel.push(100.0 * small.iter().filter(|o| o.within(1.0)).count() as f64 / small.len() as f64);
                }
                if let Some((data, res, cfg)) = questions.filter(|(data, _, _)| !data.is_empty()) {
                    let cfg = MemoryConfig {
                        d,
                        axes: opts.axes,
                        ..cfg.clone()
                    };
                    acc.push(run_seed(data, &cfg, res, seed).accuracy());
                }
            }
            CapacityRow {
                d,
                instances,
                mse_xy: MeanStd::of(&mse),
                mean_iou: MeanStd::of(&iou),
                items_pct: MeanStd::of(&items),
                select_pct_small: MeanStd::of(&sel),
                accuracy: (!acc.is_empty()).then(|| MeanStd::of(&acc)),
            }
        })
        .collect()
}
