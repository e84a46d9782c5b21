use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hrr::{make_planar_axes, make_unitary_axis_with, HyperVector, PhaseDistribution, RngSeed, UnitaryAxisVector};

use super::cleanup::CleanupGrid;
use super::{GridPose, SceneError};

/// How the position axes are generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PositionAxes {
    /// `X` and `Y` drawn independently from one distribution.
    Independent { phases: PhaseDistribution },
    /// `X` and `Y` built jointly by [`make_planar_axes`].
    Planar { period: u32 },
}

/// Generation of the position axes (x, y) and size axes (w, h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisConfig {
    pub xy: PositionAxes,
    pub wh: PhaseDistribution,
}

impl Default for AxisConfig {
    /// Band-limited axes: planar x/y lattice with period 128, w/h phases in
    /// `[-π/2, π/2]`. The similarity kernel then falls off over a few grid
    /// units instead of a fraction of one, which is what makes decoding of
    /// off-grid poses and region queries workable.
    fn default() -> Self {
        Self {
            xy: PositionAxes::Planar { period: 128 },
            wh: PhaseDistribution::Banded { half_width: PI / 2.0 },
        }
    }
}

impl AxisConfig {
    /// All four axes with phases uniform on the circle.
    pub fn uniform() -> Self {
        Self::independent(PhaseDistribution::Uniform, PhaseDistribution::Uniform)
    }

    pub fn independent(xy: PhaseDistribution, wh: PhaseDistribution) -> Self {
        Self {
            xy: PositionAxes::Independent { phases: xy },
            wh,
        }
    }
}

/// The four axis vectors `X, Y, W, H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSet {
    pub x: UnitaryAxisVector,
    pub y: UnitaryAxisVector,
    pub w: UnitaryAxisVector,
    pub h: UnitaryAxisVector,
}

impl AxisSet {
    pub fn generate(d: usize, seed: RngSeed, config: &AxisConfig) -> Result<Self, SceneError> {
        let s = seed.derive(0);
        let (x, y) = match config.xy {
            PositionAxes::Independent { phases } => (
                make_unitary_axis_with(d, s.derive(0), phases)?,
                make_unitary_axis_with(d, s.derive(1), phases)?,
            ),
            PositionAxes::Planar { period } => make_planar_axes(d, s.derive(0), period)?,
        };
        Ok(Self {
            x,
            y,
            w: make_unitary_axis_with(d, s.derive(2), config.wh)?,
            h: make_unitary_axis_with(d, s.derive(3), config.wh)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// Spectrum of `X^x ⊛ Y^y ⊛ W^w ⊛ H^h`.
    pub fn pose_spectrum(&self, p: &GridPose) -> Vec<Complex64> {
        let (px, py, pw, ph) = (self.x.phases(), self.y.phases(), self.w.phases(), self.h.phases());
        (0..self.dim())
            .map(|k| Complex64::from_polar(1.0, px[k] * p.x + py[k] * p.y + pw[k] * p.w + ph[k] * p.h))
            .collect()
    }

    /// Spectrum of `X^x ⊛ Y^y`.
    pub fn location_spectrum(&self, x: f64, y: f64) -> Vec<Complex64> {
        let (px, py) = (self.x.phases(), self.y.phases());
        (0..self.dim())
            .map(|k| Complex64::from_polar(1.0, px[k] * x + py[k] * y))
            .collect()
    }

    /// The spatial pointer `S(x, y, w, h)`.
    pub fn pose_vector(&self, p: &GridPose) -> HyperVector {
        HyperVector::from_spectrum(&self.pose_spectrum(p))
    }

    pub fn location_vector(&self, x: f64, y: f64) -> HyperVector {
        HyperVector::from_spectrum(&self.location_spectrum(x, y))
    }
}

/// Everything shared by the memories of one dimension and seed: the axes
/// and the clean-up grid built from them.
#[derive(Debug)]
pub struct SspSpace {
    pub d: usize,
    pub seed: RngSeed,
    pub config: AxisConfig,
    pub axes: AxisSet,
    pub grid: CleanupGrid,
}

impl SspSpace {
    pub fn new(d: usize, seed: RngSeed, config: AxisConfig) -> Result<Arc<Self>, SceneError> {
        let axes = AxisSet::generate(d, seed, &config)?;
        let grid = CleanupGrid::new(&axes);
        Ok(Arc::new(Self {
            d,
            seed,
            config,
            axes,
            grid,
        }))
    }

    pub fn with_defaults(d: usize, seed: RngSeed) -> Result<Arc<Self>, SceneError> {
        Self::new(d, seed, AxisConfig::default())
    }

    /// Semantic pointer of one object instance. Keyed by label and object id
    /// so that it does not depend on the object's position in a list.
    pub fn object_sp(&self, label: &str, object_id: &str) -> HyperVector {
        let seed = self.seed.derive(1).derive_str(label).derive_str(object_id);
        crate::hrr::random_sp(self.d, seed).expect("dimension validated at construction")
    }
}
