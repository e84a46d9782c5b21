//! Holographic reduced representation algebra over real vectors.
//!
//! Binding is circular convolution, computed through the FFT. Unbinding
//! binds with the index-reversal involution, which is the exact inverse for
//! vectors with a unit-magnitude spectrum. Every semantic pointer produced by
//! [`random_sp`] and every axis from [`make_unitary_axis`] has that property.

mod axis;
pub mod fft;
mod rng;
mod vector;

pub use axis::{
    fractional_power, make_planar_axes, make_unitary_axis, make_unitary_axis_with, LatticePhases, PhaseDistribution,
    UnitaryAxisVector,
};
pub use rng::RngSeed;
pub use vector::{bind, involution, random_sp, similarity, superpose, unbind, HyperVector, SimilarityKind};

/// Default vector dimension.
pub const DEFAULT_DIM: usize = 1024;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HrrError {
    #[error("invalid dimension {0}: must be at least 2")]
    InvalidDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector contains non-finite components")]
    NonFinite,
    #[error("cannot superpose an empty list")]
    EmptySuperposition,
    #[error("exponent must be finite")]
    NonFiniteExponent,
    #[error("invalid axis configuration: {0}")]
    InvalidAxis(String),
}

/// Direct O(d²) circular convolution, used as an oracle for [`bind`].
pub fn circular_convolution_direct(a: &HyperVector, b: &HyperVector) -> Result<HyperVector, HrrError> {
    if a.dim() != b.dim() {
        return Err(HrrError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let d = a.dim();
    let (x, y) = (a.as_slice(), b.as_slice());
    let out = (0..d)
        .map(|i| (0..d).map(|j| x[j] * y[(d + i - j) % d]).sum())
        .collect();
    HyperVector::new(out)
}
