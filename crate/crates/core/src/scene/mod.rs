//! Scene encoding into spatial semantic pointer memories, and decoding.

pub mod cleanup;
pub mod graph;
mod memory;
pub mod metrics;
mod pose;
mod space;
pub mod store;

pub use cleanup::{CleanupGrid, DecodeResult, DecodeStrategy, Heatmap, LocationResult};
pub use graph::{load_scene_graphs, parse_scene_graphs, save_scene_graphs, GraphObject, GraphRelation, SceneGraph};
pub use memory::{encode_scene, SSPMemory, Selection, VocabEntry};
pub use metrics::{instance_outcomes, scene_metrics, summarize, PoseOutcome, SceneMetrics};
pub use pose::{normalize_object, normalize_scene, GridBox, GridPose, ImageSize, SceneObject, WH_MAX, WH_SCALE, XY_MAX};
pub use space::{AxisConfig, AxisSet, PositionAxes, SspSpace};

use crate::hrr::HrrError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("degenerate image size {width}x{height}")]
    DegenerateImage { width: f64, height: f64 },
    #[error("invalid object {object_id}: {reason}")]
    InvalidObject { object_id: String, reason: String },
    #[error("pose out of range: {0:?}")]
    PoseOutOfRange(GridPose),
    #[error("scene has no objects")]
    EmptyScene,
    #[error("duplicate object id {0}")]
    DuplicateObjectId(String),
    #[error("label {0} not in the scene")]
    UnknownLabel(String),
    #[error(transparent)]
    Hrr(#[from] HrrError),
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("corrupt memory file: {0}")]
    Corrupt(String),
}
