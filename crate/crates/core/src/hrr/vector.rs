use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft;
use super::{HrrError, RngSeed};

/// Real-valued vector of fixed dimension; the carrier for semantic pointers,
/// spatial points and scene memories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct HyperVector {
    components: Vec<f64>,
}

impl HyperVector {
    pub fn new(components: Vec<f64>) -> Result<Self, HrrError> {
        if components.is_empty() {
            return Err(HrrError::InvalidDimension(0));
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(HrrError::NonFinite);
        }
        Ok(Self { components })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            components: vec![0.0; d],
        }
    }

    /// The binding identity `[1, 0, ..., 0]`.
    pub fn identity(d: usize) -> Self {
        let mut components = vec![0.0; d];
        components[0] = 1.0;
        Self { components }
    }

    /// Builds a vector from a full spectrum, discarding any imaginary residue.
    pub fn from_spectrum(spectrum: &[Complex64]) -> Self {
        Self {
            components: fft::inverse_real(spectrum),
        }
    }

    pub(crate) fn from_raw(components: Vec<f64>) -> Self {
        debug_assert!(components.iter().all(|c| c.is_finite()));
        Self { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.components
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.components
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        fft::forward(&self.components)
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Unit-norm copy; the zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scaled(1.0 / n)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            components: self.components.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_same(&self, other: &Self) -> Result<(), HrrError> {
        if self.dim() != other.dim() {
            return Err(HrrError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for HyperVector {
    type Error = HrrError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<HyperVector> for Vec<f64> {
    fn from(v: HyperVector) -> Self {
        v.components
    }
}

/// Similarity measure used for ranking and thresholding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityKind {
    Dot,
    Cosine,
}

pub(crate) fn check_dim(d: usize) -> Result<(), HrrError> {
    if d < 2 {
        Err(HrrError::InvalidDimension(d))
    } else {
        Ok(())
    }
}

/// Random semantic pointer.
///
/// Components are drawn i.i.d. standard normal, then every Fourier coefficient
/// is scaled to unit magnitude. The result has unit norm and its involution is
/// an exact binding inverse.
pub fn random_sp(d: usize, seed: RngSeed) -> Result<HyperVector, HrrError> {
    check_dim(d)?;
    let mut rng = seed.rng();
    let raw: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut spec = fft::forward(&raw);
    for c in spec.iter_mut() {
        let m = c.norm();
        *c = if m > 1e-12 { *c / m } else { Complex64::new(1.0, 0.0) };
    }
    // Real-valued signals have real DC/Nyquist bins; keep their sign.
    spec[0] = Complex64::new(spec[0].re.signum_or_one(), 0.0);
    if d.is_multiple_of(2) {
        let k = d / 2;
        spec[k] = Complex64::new(spec[k].re.signum_or_one(), 0.0);
    }
    Ok(HyperVector::from_spectrum(&spec))
}

trait SignumOrOne {
    fn signum_or_one(self) -> f64;
}

impl SignumOrOne for f64 {
    fn signum_or_one(self) -> f64 {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Circular convolution, computed as an elementwise product of spectra.
pub fn bind(a: &HyperVector, b: &HyperVector) -> Result<HyperVector, HrrError> {
    a.check_same(b)?;
    let sa = a.spectrum();
    let sb = b.spectrum();
    let prod: Vec<Complex64> = sa.iter().zip(&sb).map(|(x, y)| x * y).collect();
    Ok(HyperVector::from_spectrum(&prod))
}

/// Index-reversal involution: `r[0] = a[0]`, `r[i] = a[d - i]`.
pub fn involution(a: &HyperVector) -> HyperVector {
    let d = a.dim();
    let c = a.as_slice();
    let mut out = Vec::with_capacity(d);
    out.push(c[0]);
    out.extend((1..d).map(|i| c[d - i]));
    HyperVector::from_raw(out)
}

/// `bind(m, involution(key))`.
pub fn unbind(m: &HyperVector, key: &HyperVector) -> Result<HyperVector, HrrError> {
    m.check_same(key)?;
    let sm = m.spectrum();
    let sk = key.spectrum();
    let prod: Vec<Complex64> = sm.iter().zip(&sk).map(|(x, y)| x * y.conj()).collect();
    Ok(HyperVector::from_spectrum(&prod))
}

/// Elementwise sum, unnormalized.
pub fn superpose(vs: &[HyperVector]) -> Result<HyperVector, HrrError> {
    let first = vs.first().ok_or(HrrError::EmptySuperposition)?;
    let mut acc = first.components.clone();
    for v in &vs[1..] {
        first.check_same(v)?;
        for (a, b) in acc.iter_mut().zip(&v.components) {
            *a += b;
        }
    }
    Ok(HyperVector::from_raw(acc))
}

/// Dot product or cosine; the cosine involving a zero vector is 0.
pub fn similarity(a: &HyperVector, b: &HyperVector, kind: SimilarityKind) -> Result<f64, HrrError> {
    a.check_same(b)?;
    let dot = a.dot(b);
    Ok(match kind {
        SimilarityKind::Dot => dot,
        SimilarityKind::Cosine => {
            let n = a.norm() * b.norm();
            if n == 0.0 {
                0.0
            } else {
                dot / n
            }
        }
    })
}
