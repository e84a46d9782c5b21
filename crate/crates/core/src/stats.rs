//! Pearson correlation with a one-sided t-test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("samples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 samples, got {0}")]
    TooFew(usize),
    #[error("a sample has zero variance")]
    Degenerate,
    #[error("non-finite sample value")]
    NonFinite,
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::Degenerate);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub n: usize,
    pub t: f64,
    /// `P(T <= t)` under zero correlation, the p-value against a negative
    /// correlation alternative.
    pub p_lower: f64,
    /// `P(T >= t)`, the p-value against a positive correlation alternative.
    pub p_upper: f64,
}

/// Pearson `r` with `t = r·sqrt((n-2)/(1-r²))` on `n - 2` degrees of freedom.
pub fn correlation_test(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    if x.len() < 3 {
        return Err(StatsError::TooFew(x.len()));
    }
    let r = pearson(x, y)?;
    let n = x.len();
    let df = (n - 2) as f64;
    let (t, p_lower) = if r.abs() >= 1.0 {
        let t = r.signum() * f64::INFINITY;
        (t, if r < 0.0 { 0.0 } else { 1.0 })
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        (t, dist.cdf(t))
    };
    Ok(Correlation {
        r,
        n,
        t,
        p_lower,
        p_upper: 1.0 - p_lower,
    })
}
