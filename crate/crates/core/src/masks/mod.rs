//! Spatial query masks: learning, storage, and relation queries.

mod library;
mod mask;
mod region;

pub use library::{
    default_inverses, default_synonyms, normalize_term, parse_inverses, parse_synonyms, HypernymTable, MaskLibrary,
};
pub use mask::{
    accumulate, learn_mask, load_mask, save_mask, Accumulator, BoxPx, QueryMask, RelationSample, ANCHOR_CELLS,
    DEFAULT_MIN_SAMPLES, DEFAULT_THRESHOLD, FRAME, FRAME_CENTER,
};
pub use region::{
    encode_region, instance_score, region_cells, relate, relate_from, relate_name, Anchor, Proposal, Region,
    RegionScoring, RelateConfig, MIN_ANCHOR_SIZE,
};

use std::collections::BTreeMap;

use crate::scene::{GridPose, SceneError, SceneGraph};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MaskError {
    #[error("relation {relation}: {found} valid samples, at least {required} required")]
    TooFewSamples {
        relation: String,
        found: usize,
        required: usize,
    },
    #[error("mask for {0} has no active cells")]
    EmptyMask(String),
    #[error("malformed mask data: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("inconsistent mask library: {0}")]
    Library(String),
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("anchor {0} not found")]
    AnchorNotFound(String),
    #[error("anchor has zero width or height: {0:?}")]
    DegenerateAnchor(GridPose),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Relation samples of one scene graph. For each annotation `A r B` the
/// anchor is `B` and the relative box is `A`, so a mask marks where subjects
/// of the relation lie around its object.
pub fn relation_samples(graph: &SceneGraph) -> Vec<RelationSample> {
    let boxed = |id: &str| {
        graph.objects.get(id).map(|o| BoxPx {
            x: o.x,
            y: o.y,
            w: o.w,
            h: o.h,
        })
    };
    graph
        .relation_triples()
        .into_iter()
        .filter_map(|(s, r, o)| {
            Some(RelationSample {
                relation: normalize_term(&r),
                anchor_box: boxed(&o)?,
                relative_box: boxed(&s)?,
            })
        })
        .collect()
}

/// Outcome of learning masks from a corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearnReport {
    pub learned: Vec<(String, usize)>,
    pub skipped: Vec<(String, usize)>,
}

/// Learns one mask per relation with at least `min_samples` samples.
pub fn learn_masks(
    graphs: &[SceneGraph],
    min_samples: usize,
    threshold: f64,
) -> (Vec<QueryMask>, LearnReport) {
    let mut by_rel: BTreeMap<String, Vec<RelationSample>> = BTreeMap::new();
    for g in graphs {
        for s in relation_samples(g) {
            by_rel.entry(s.relation.clone()).or_default().push(s);
        }
    }
    let mut masks = Vec::new();
    let mut report = LearnReport::default();
    for (rel, samples) in by_rel {
        match learn_mask(&rel, &samples, threshold, min_samples) {
            Ok(m) => {
                report.learned.push((rel, m.sample_count()));
                masks.push(m);
            }
            Err(_) => report.skipped.push((rel, samples.len())),
        }
    }
    (masks, report)
}
