//! Thin wrappers over `rustfft` with a per-thread planner cache.
//!
//! Spectra are full-length (d complex bins, unnormalized forward transform).
//! The inverse divides by d so that `inverse(forward(v)) == v`.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

pub(crate) fn inverse_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// Forward transform of a real signal.
pub fn forward(signal: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward_plan(buf.len()).process(&mut buf);
    buf
}

/// Inverse transform, keeping the real part.
pub fn inverse_real(spectrum: &[Complex64]) -> Vec<f64> {
    let mut buf = spectrum.to_vec();
    inverse_plan(buf.len()).process(&mut buf);
    let n = buf.len() as f64;
    buf.into_iter().map(|c| c.re / n).collect()
}

/// Largest imaginary magnitude after the inverse transform, scaled like the
/// real part. Used to check that a constructed spectrum is conjugate-symmetric.
pub fn inverse_max_imag(spectrum: &[Complex64]) -> f64 {
    let mut buf = spectrum.to_vec();
    inverse_plan(buf.len()).process(&mut buf);
    let n = buf.len() as f64;
    buf.iter().map(|c| (c.im / n).abs()).fold(0.0, f64::max)
}
