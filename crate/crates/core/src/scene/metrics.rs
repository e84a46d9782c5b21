use serde::{Deserialize, Serialize};

use super::cleanup::DecodeStrategy;
use super::memory::SSPMemory;
use super::{GridPose, SceneError};

/// A true pose next to the decoded one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseOutcome {
    pub truth: GridPose,
    pub decoded: GridPose,
}

impl PoseOutcome {
    pub fn iou(&self) -> f64 {
        self.truth.to_box().iou(&self.decoded.to_box())
    }

    pub fn squared_error_xy(&self) -> f64 {
        (self.truth.x - self.decoded.x).powi(2) + (self.truth.y - self.decoded.y).powi(2)
    }

    /// Decoded position within `tol` grid units of the truth on both axes.
    pub fn within(&self, tol: f64) -> bool {
        (self.truth.x - self.decoded.x).abs() <= tol && (self.truth.y - self.decoded.y).abs() <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneMetrics {
    pub count: usize,
    /// Mean squared (x, y) distance in grid units.
    pub mse_xy: f64,
    pub mean_iou: f64,
    /// Percentage of items with IoU above 0.5.
    pub items_pct: f64,
}

pub fn summarize(outcomes: &[PoseOutcome]) -> Result<SceneMetrics, SceneError> {
    if outcomes.is_empty() {
        return Err(SceneError::EmptyScene);
    }
    let n = outcomes.len() as f64;
    let mse_xy = outcomes.iter().map(PoseOutcome::squared_error_xy).sum::<f64>() / n;
    let ious: Vec<f64> = outcomes.iter().map(PoseOutcome::iou).collect();
    let mean_iou = ious.iter().sum::<f64>() / n;
    let items_pct = 100.0 * ious.iter().filter(|&&v| v > 0.5).count() as f64 / n;
    Ok(SceneMetrics {
        count: outcomes.len(),
        mse_xy,
        mean_iou,
        items_pct,
    })
}

/// Selects each truth label and scores the decoded pose against the truth.
pub fn scene_metrics(
    memory: &SSPMemory,
    truth: &[(String, GridPose)],
    strategy: DecodeStrategy,
) -> Result<SceneMetrics, SceneError> {
    let outcomes = truth
        .iter()
        .map(|(label, pose)| {
            let sel = memory
                .select(label, strategy)
                .ok_or_else(|| SceneError::UnknownLabel(label.clone()))?;
            Ok(PoseOutcome {
                truth: *pose,
                decoded: sel.result.pose,
            })
        })
        .collect::<Result<Vec<_>, SceneError>>()?;
    summarize(&outcomes)
}

/// Decodes every instance through its own pointer.
pub fn instance_outcomes(memory: &SSPMemory, strategy: DecodeStrategy) -> Vec<PoseOutcome> {
    memory
        .entries()
        .iter()
        .map(|e| PoseOutcome {
            truth: e.pose,
            decoded: memory.decode_instance(e, strategy).pose,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_decode() {
        let p = GridPose { x: 10.0, y: 20.0, w: 3.0, h: 4.0 };
        let m = summarize(&[PoseOutcome { truth: p, decoded: p }]).unwrap();
        assert_eq!(m.mse_xy, 0.0);
        assert_eq!(m.mean_iou, 1.0);
        assert_eq!(m.items_pct, 100.0);
    }

    #[test]
    fn mixed_outcomes() {
        let t = GridPose { x: 0.0, y: 0.0, w: 1.0, h: 1.0 };
        let half = GridPose { x: 5.0, y: 0.0, w: 1.0, h: 1.0 };
        let m = summarize(&[PoseOutcome { truth: t, decoded: t }, PoseOutcome { truth: t, decoded: half }]).unwrap();
        assert!((m.mean_iou - (1.0 + 1.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(m.items_pct, 50.0);
        assert!((m.mse_xy - 12.5).abs() < 1e-12);
        assert!(summarize(&[]).is_err());
    }
}
