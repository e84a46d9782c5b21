use std::f64::consts::PI;

use rand::Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::vector::check_dim;
use super::{HrrError, HyperVector, RngSeed};

/// How the spectral phases of an axis vector are drawn.
///
/// Every variant yields a conjugate-symmetric unit-magnitude spectrum with
/// DC and Nyquist fixed at +1. They differ in how fast the similarity
/// `<X^a, X^b>` decays with `|a - b|` and in how it behaves far from zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseDistribution {
    /// Phases uniform on the circle.
    Uniform,
    /// Phases uniform in `[-half_width, half_width]`.
    Banded { half_width: f64 },
    /// Phases `2π·a/period` for integer `a` uniform in `[-max_index, max_index]`.
    /// Integer exponents then live on a `period`-periodic lattice, which the
    /// clean-up decoder exploits with a 2D FFT.
    Lattice { period: u32, max_index: i32 },
}

impl PhaseDistribution {
    fn validate(&self) -> Result<(), HrrError> {
        match *self {
            PhaseDistribution::Uniform => Ok(()),
            PhaseDistribution::Banded { half_width } => {
                if half_width.is_finite() && half_width > 0.0 && half_width <= PI {
                    Ok(())
                } else {
                    Err(HrrError::InvalidAxis(format!("band half-width {half_width} outside (0, π]")))
                }
            }
            PhaseDistribution::Lattice { period, max_index } => {
                if period < 2 || max_index < 0 || 2 * (max_index as i64) >= period as i64 {
                    Err(HrrError::InvalidAxis(format!(
                        "lattice period {period} with max index {max_index}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Integer phase indices of a lattice axis, signed so that scaling by a
/// fractional exponent keeps the spectrum conjugate-symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePhases {
    pub period: u32,
    pub indices: Vec<i32>,
}

/// Axis vector with unit-magnitude spectrum, supporting real exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AxisRepr", into = "AxisRepr")]
pub struct UnitaryAxisVector {
    base: HyperVector,
    phases: Vec<f64>,
    spectrum: Vec<Complex64>,
    lattice: Option<LatticePhases>,
}

#[derive(Serialize, Deserialize)]
struct AxisRepr {
    phases: Vec<f64>,
    lattice: Option<LatticePhases>,
}

impl From<UnitaryAxisVector> for AxisRepr {
    fn from(a: UnitaryAxisVector) -> Self {
        AxisRepr {
            phases: a.phases,
            lattice: a.lattice,
        }
    }
}

impl TryFrom<AxisRepr> for UnitaryAxisVector {
    type Error = HrrError;

    fn try_from(r: AxisRepr) -> Result<Self, HrrError> {
        UnitaryAxisVector::from_phases(r.phases, r.lattice)
    }
}

impl UnitaryAxisVector {
    /// Rebuilds an axis from its phases; they must be finite and odd-symmetric.
    pub fn from_phases(phases: Vec<f64>, lattice: Option<LatticePhases>) -> Result<Self, HrrError> {
        let d = phases.len();
        check_dim(d)?;
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(HrrError::NonFinite);
        }
        let symmetric = (1..d).all(|k| (phases[k] + phases[d - k]).abs() < 1e-12) && phases[0] == 0.0;
        if !symmetric {
            return Err(HrrError::InvalidAxis("phases are not conjugate-symmetric".into()));
        }
        if let Some(lat) = &lattice {
            if lat.indices.len() != d {
                return Err(HrrError::InvalidAxis("lattice index count differs from dimension".into()));
            }
        }
        let spectrum: Vec<Complex64> = phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
        let base = HyperVector::from_spectrum(&spectrum);
        Ok(Self {
            base,
            phases,
            spectrum,
            lattice,
        })
    }

    pub fn base(&self) -> &HyperVector {
        &self.base
    }

    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    /// Spectral phases in radians. `phases[d - k] == -phases[k]`.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn lattice(&self) -> Option<&LatticePhases> {
        self.lattice.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Spectrum of `self^exponent`. The caller guarantees a finite exponent.
    pub fn power_spectrum(&self, exponent: f64) -> Vec<Complex64> {
        self.phases
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p * exponent))
            .collect()
    }

    /// `self^exponent` in the time domain.
    pub fn power(&self, exponent: f64) -> Result<HyperVector, HrrError> {
        if !exponent.is_finite() {
            return Err(HrrError::NonFiniteExponent);
        }
        Ok(HyperVector::from_spectrum(&self.power_spectrum(exponent)))
    }
}

/// Unitary axis with phases uniform on the circle.
pub fn make_unitary_axis(d: usize, seed: RngSeed) -> Result<UnitaryAxisVector, HrrError> {
    make_unitary_axis_with(d, seed, PhaseDistribution::Uniform)
}

pub fn make_unitary_axis_with(
    d: usize,
    seed: RngSeed,
    dist: PhaseDistribution,
) -> Result<UnitaryAxisVector, HrrError> {
    check_dim(d)?;
    dist.validate()?;
    let mut rng = seed.rng();
    let half = (d - 1) / 2;
    let mut phases = vec![0.0; d];
    let mut lattice = match dist {
        PhaseDistribution::Lattice { period, .. } => Some(LatticePhases {
            period,
            indices: vec![0; d],
        }),
        _ => None,
    };
    for k in 1..=half {
        let p = match dist {
            PhaseDistribution::Uniform => rng.gen_range(-PI..PI),
            PhaseDistribution::Banded { half_width } => rng.gen_range(-half_width..=half_width),
            PhaseDistribution::Lattice { period, max_index } => {
                let a = rng.gen_range(-max_index..=max_index);
                let lat = lattice.as_mut().expect("lattice axis");
                lat.indices[k] = a;
                lat.indices[d - k] = -a;
                2.0 * PI * f64::from(a) / f64::from(period)
            }
        };
        phases[k] = p;
        phases[d - k] = -p;
    }
    UnitaryAxisVector::from_phases(phases, lattice)
}

/// A pair of lattice axes `X, Y` built jointly: bin `k` carries the 2D
/// frequency `(a_k, b_k)` and these pairs are the distinct lattice points of
/// the half-disk closest to the origin, assigned to bins in random order.
///
/// Each 2D frequency is used once, so the similarity kernel of `X^x ⊛ Y^y`
/// is a fixed low-pass kernel instead of a randomly weighted one. Sums over
/// many locations (regions) then decode cleanly.
pub fn make_planar_axes(
    d: usize,
    seed: RngSeed,
    period: u32,
) -> Result<(UnitaryAxisVector, UnitaryAxisVector), HrrError> {
    check_dim(d)?;
    let half = (d - 1) / 2;
    let limit = (period / 2) as i32;
    let mut points: Vec<(i32, i32)> = Vec::new();
    for a in 0..limit {
        for b in (1 - limit)..limit {
            if a > 0 || b > 0 {
                points.push((a, b));
            }
        }
    }
    if points.len() < half {
        return Err(HrrError::InvalidAxis(format!(
            "period {period} has {} half-plane frequencies, {half} needed",
            points.len()
        )));
    }
    points.sort_by_key(|&(a, b)| (a * a + b * b, a, b));
    points.truncate(half);
    if points.iter().any(|&(a, b)| a.abs() >= limit || b.abs() >= limit) {
        return Err(HrrError::InvalidAxis(format!("dimension {d} too large for period {period}")));
    }
    let mut rng = seed.rng();
    for i in (1..points.len()).rev() {
        points.swap(i, rng.gen_range(0..=i));
    }
    let build = |pick: fn(&(i32, i32)) -> i32| {
        let mut indices = vec![0i32; d];
        let mut phases = vec![0.0; d];
        for (k, pt) in (1..=half).zip(&points) {
            let a = pick(pt);
            indices[k] = a;
            indices[d - k] = -a;
            phases[k] = 2.0 * PI * f64::from(a) / f64::from(period);
            phases[d - k] = -phases[k];
        }
        UnitaryAxisVector::from_phases(phases, Some(LatticePhases { period, indices }))
    };
    Ok((build(|p| p.0)?, build(|p| p.1)?))
}

/// `axis^exponent`: every spectral phase is multiplied by `exponent`.
pub fn fractional_power(axis: &UnitaryAxisVector, exponent: f64) -> Result<HyperVector, HrrError> {
    axis.power(exponent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hrr::fft;

    #[test]
    fn spectrum_is_unit_and_hermitian() {
        for dist in [
            PhaseDistribution::Uniform,
            PhaseDistribution::Banded { half_width: 1.0 },
            PhaseDistribution::Lattice { period: 128, max_index: 16 },
        ] {
            for d in [2, 7, 8, 64] {
                let a = make_unitary_axis_with(d, RngSeed(3), dist).unwrap();
                let spec = a.base().spectrum();
                let worst = spec.iter().map(|c| (c.norm() - 1.0).abs()).fold(0.0, f64::max);
                assert!(worst < 1e-9, "{dist:?} d={d}");
                assert!((spec[0].re - 1.0).abs() < 1e-9);
                if d % 2 == 0 {
                    assert!((spec[d / 2].re.abs() - 1.0).abs() < 1e-9);
                }
                assert!(fft::inverse_max_imag(&a.power_spectrum(2.37)) < 1e-12);
            }
        }
    }

    #[test]
    fn zero_and_unit_exponents() {
        let a = make_unitary_axis(32, RngSeed(1)).unwrap();
        assert!(a.power(0.0).unwrap().max_abs_diff(&HyperVector::identity(32)) < 1e-12);
        assert!(a.power(1.0).unwrap().max_abs_diff(a.base()) < 1e-12);
        assert!(matches!(a.power(f64::INFINITY), Err(HrrError::NonFiniteExponent)));
    }

    #[test]
    fn lattice_indices_are_signed_and_bounded() {
        let a = make_unitary_axis_with(65, RngSeed(9), PhaseDistribution::Lattice { period: 128, max_index: 16 })
            .unwrap();
        let lat = a.lattice().unwrap();
        assert_eq!(lat.indices[0], 0);
        for k in 1..65 {
            assert_eq!(lat.indices[k], -lat.indices[65 - k]);
            assert!(lat.indices[k].abs() <= 16);
        }
    }

    #[test]
    fn serde_round_trip() {
        let a = make_unitary_axis_with(16, RngSeed(4), PhaseDistribution::Lattice { period: 128, max_index: 16 })
            .unwrap();
        let json = serde_json::to_string(&a).unwrap();
        let b: UnitaryAxisVector = serde_json::from_str(&json).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            PhaseDistribution::Banded { half_width: 0.0 },
            PhaseDistribution::Banded { half_width: f64::NAN },
            PhaseDistribution::Lattice { period: 1, max_index: 0 },
            PhaseDistribution::Lattice { period: 32, max_index: 16 },
        ];
        for dist in bad {
            assert!(matches!(make_unitary_axis_with(16, RngSeed(0), dist), Err(HrrError::InvalidAxis(_))));
        }
        assert!(matches!(make_unitary_axis(1, RngSeed(0)), Err(HrrError::InvalidDimension(1))));
    }
}
