//! Clean-up memory over the 101×101×11×11 pose grid.
//!
//! Scores are dot products `<q, S(x, y, w, h)>`. With both position axes on
//! the same phase lattice, the score over all (x, y) for fixed (w, h) is one
//! 2D DFT of the query spectrum scattered onto the lattice, which makes the
//! exhaustive search exact and cheap. Other axes fall back to a direct
//! separable sum.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hrr::fft;
use crate::hrr::HyperVector;

use super::pose::{WH_MAX, XY_MAX};
use super::space::AxisSet;
use super::{GridPose, SceneError};

const NX: usize = XY_MAX as usize + 1;
const NW: usize = WH_MAX as usize + 1;
const NWH: usize = NW * NW;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecodeStrategy {
    /// Argmax over every grid point.
    Exhaustive,
    /// Argmax of (x, y) against the w/h marginal, then of (w, h) at the
    /// `beam` best positions.
    TwoStage { beam: usize },
}

/// Default shortlist for two-stage decoding. Off-grid poses frequently put
/// two neighbouring (x, y) cells within noise of each other under the w/h
/// marginal; re-ranking a handful of them by the full score resolves that.
pub const DEFAULT_BEAM: usize = 8;

impl DecodeStrategy {
    pub fn two_stage() -> Self {
        DecodeStrategy::TwoStage { beam: DEFAULT_BEAM }
    }
}

/// Similarity over the (x, y) grid, stored row by row (`y` major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl Heatmap {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    fn from_xy_major(grid: &[f64]) -> Self {
        let mut values = vec![0.0; NX * NX];
        for x in 0..NX {
            for y in 0..NX {
                values[y * NX + x] = grid[x * NX + y];
            }
        }
        Heatmap {
            width: NX,
            height: NX,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub pose: GridPose,
    pub score: f64,
    pub heatmap: Option<Heatmap>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocationResult {
    pub x: u32,
    pub y: u32,
    pub score: f64,
}

#[derive(Debug)]
struct Lattice {
    period: usize,
    ax: Vec<usize>,
    ay: Vec<usize>,
    rows: Vec<usize>,
}

#[derive(Debug)]
pub struct CleanupGrid {
    d: usize,
    x_pows: Vec<Vec<Complex64>>,
    y_pows: Vec<Vec<Complex64>>,
    w_pows: Vec<Vec<Complex64>>,
    h_pows: Vec<Vec<Complex64>>,
    /// Conjugate spectra of `W^w ⊛ H^h`, indexed `w * 11 + h`.
    wh_conj: Vec<Vec<Complex64>>,
    marginal: Vec<Complex64>,
    lattice: Option<Lattice>,
}

/// Running argmax with lexicographic tie-break on `(x, y, w, h)`.
#[derive(Clone, Copy)]
struct Best {
    score: f64,
    key: (usize, usize, usize, usize),
}

impl Best {
    fn new() -> Self {
        Best {
            score: f64::NEG_INFINITY,
            key: (usize::MAX, 0, 0, 0),
        }
    }

    fn offer(&mut self, score: f64, key: (usize, usize, usize, usize)) {
        if score > self.score || (score == self.score && key < self.key) {
            self.score = score;
            self.key = key;
        }
    }
}

fn powers(axis: &crate::hrr::UnitaryAxisVector, n: usize) -> Vec<Vec<Complex64>> {
    (0..n).map(|e| axis.power_spectrum(e as f64)).collect()
}

impl CleanupGrid {
    pub fn new(axes: &AxisSet) -> Self {
        let d = axes.dim();
        let x_pows = powers(&axes.x, NX);
        let y_pows = powers(&axes.y, NX);
        let w_pows = powers(&axes.w, NW);
        let h_pows = powers(&axes.h, NW);
        let mut wh_conj = Vec::with_capacity(NWH);
        for w in &w_pows {
            for h in &h_pows {
                wh_conj.push(w.iter().zip(h).map(|(a, b)| (a * b).conj()).collect());
            }
        }
        let sum = |p: &Vec<Vec<Complex64>>| -> Vec<Complex64> {
            (0..d).map(|k| p.iter().map(|v| v[k]).sum()).collect()
        };
        let (sw, sh) = (sum(&w_pows), sum(&h_pows));
        let marginal = sw.iter().zip(&sh).map(|(a, b)| a * b).collect();
        let lattice = match (axes.x.lattice(), axes.y.lattice()) {
            (Some(lx), Some(ly)) if lx.period == ly.period && lx.period as usize >= NX => {
                let p = lx.period as i64;
                let wrap = |a: i32| (i64::from(a).rem_euclid(p)) as usize;
                let ax: Vec<usize> = lx.indices.iter().map(|&a| wrap(a)).collect();
                let ay: Vec<usize> = ly.indices.iter().map(|&a| wrap(a)).collect();
                let mut rows: Vec<usize> = ax.clone();
                rows.sort_unstable();
                rows.dedup();
                Some(Lattice {
                    period: p as usize,
                    ax,
                    ay,
                    rows,
                })
            }
            _ => None,
        };
        CleanupGrid {
            d,
            x_pows,
            y_pows,
            w_pows,
            h_pows,
            wh_conj,
            marginal,
            lattice,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Sizes of the x, y, w and h dictionaries.
    pub fn dictionary_sizes(&self) -> [usize; 4] {
        [self.x_pows.len(), self.y_pows.len(), self.w_pows.len(), self.h_pows.len()]
    }

    /// Spectrum of `X^x`.
    pub fn x_power(&self, x: usize) -> &[Complex64] {
        &self.x_pows[x]
    }

    /// Spectrum of `Y^y`.
    pub fn y_power(&self, y: usize) -> &[Complex64] {
        &self.y_pows[y]
    }

    pub fn uses_lattice(&self) -> bool {
        self.lattice.is_some()
    }

    /// Spectrum of the w/h marginal `Σ_{w,h} W^w ⊛ H^h`.
    pub fn marginal(&self) -> &[Complex64] {
        &self.marginal
    }

    fn check(&self, q: &HyperVector) -> Result<Vec<Complex64>, SceneError> {
        if q.dim() != self.d {
            return Err(SceneError::Hrr(crate::hrr::HrrError::DimensionMismatch {
                expected: self.d,
                found: q.dim(),
            }));
        }
        Ok(q.spectrum())
    }

    /// `<q, S(pose)>` for an on-grid pose.
    pub fn score(&self, q: &HyperVector, x: usize, y: usize, w: usize, h: usize) -> Result<f64, SceneError> {
        let qs = self.check(q)?;
        Ok(self.score_spectrum(&qs, x, y, w, h))
    }

    fn score_spectrum(&self, qs: &[Complex64], x: usize, y: usize, w: usize, h: usize) -> f64 {
        let (xp, yp, wh) = (&self.x_pows[x], &self.y_pows[y], &self.wh_conj[w * NW + h]);
        let mut acc = 0.0;
        for k in 0..self.d {
            acc += (qs[k] * (xp[k] * yp[k]).conj() * wh[k]).re;
        }
        acc / self.d as f64
    }

    pub fn decode(
        &self,
        q: &HyperVector,
        strategy: DecodeStrategy,
        with_heatmap: bool,
    ) -> Result<DecodeResult, SceneError> {
        let qs = self.check(q)?;
        Ok(match strategy {
            DecodeStrategy::Exhaustive => self.exhaustive(&qs, with_heatmap),
            DecodeStrategy::TwoStage { beam } => self.two_stage(&qs, beam.max(1), with_heatmap),
        })
    }

    /// Best (x, y) for a query against the 2D dictionary `X^x ⊛ Y^y`.
    pub fn decode_location(&self, q: &HyperVector) -> Result<LocationResult, SceneError> {
        let qs = self.check(q)?;
        let grid = self.xy_scores(&qs);
        let (x, y, score) = argmax_xy(&grid);
        Ok(LocationResult {
            x: x as u32,
            y: y as u32,
            score,
        })
    }

    /// Similarity of a 2D query with every `X^x ⊛ Y^y`.
    pub fn location_heatmap(&self, q: &HyperVector) -> Result<Heatmap, SceneError> {
        let qs = self.check(q)?;
        Ok(Heatmap::from_xy_major(&self.xy_scores(&qs)))
    }

    fn exhaustive(&self, qs: &[Complex64], with_heatmap: bool) -> DecodeResult {
        let mut best = Best::new();
        let mut envelope = if with_heatmap {
            Some(vec![f64::NEG_INFINITY; NX * NX])
        } else {
            None
        };
        let mut visit = |wh: usize, grid: &[f64]| {
            let (w, h) = (wh / NW, wh % NW);
            for x in 0..NX {
                for y in 0..NX {
                    let s = grid[x * NX + y];
                    best.offer(s, (x, y, w, h));
                }
            }
            if let Some(env) = envelope.as_mut() {
                for (e, s) in env.iter_mut().zip(grid) {
                    *e = e.max(*s);
                }
            }
        };
        let filtered = |wh: usize| -> Vec<Complex64> {
            qs.iter().zip(&self.wh_conj[wh]).map(|(a, b)| a * b).collect()
        };
        let mut wh = 0;
        while wh < NWH {
            if wh + 1 < NWH {
                let (a, b) = self.xy_scores_pair(&filtered(wh), &filtered(wh + 1));
                visit(wh, &a);
                visit(wh + 1, &b);
                wh += 2;
            } else {
                visit(wh, &self.xy_scores(&filtered(wh)));
                wh += 1;
            }
        }
        let (x, y, w, h) = best.key;
        DecodeResult {
            pose: grid_pose(x, y, w, h),
            score: best.score,
            heatmap: envelope.map(|e| Heatmap::from_xy_major(&e)),
        }
    }

    fn two_stage(&self, qs: &[Complex64], beam: usize, with_heatmap: bool) -> DecodeResult {
        let c: Vec<Complex64> = qs.iter().zip(&self.marginal).map(|(a, b)| a * b.conj()).collect();
        let grid = self.xy_scores(&c);
        let mut order: Vec<usize> = (0..NX * NX).collect();
        // Descending score, ties by lowest (x, y).
        order.sort_by(|&i, &j| grid[j].total_cmp(&grid[i]).then(i.cmp(&j)));
        let mut best = Best::new();
        for &cell in order.iter().take(beam) {
            let (x, y) = (cell / NX, cell % NX);
            let base: Vec<Complex64> = (0..self.d)
                .map(|k| qs[k] * (self.x_pows[x][k] * self.y_pows[y][k]).conj())
                .collect();
            for wh in 0..NWH {
                let row = &self.wh_conj[wh];
                let mut acc = 0.0;
                for k in 0..self.d {
                    acc += (base[k] * row[k]).re;
                }
                best.offer(acc / self.d as f64, (x, y, wh / NW, wh % NW));
            }
        }
        let (x, y, w, h) = best.key;
        DecodeResult {
            pose: grid_pose(x, y, w, h),
            score: best.score,
            heatmap: with_heatmap.then(|| Heatmap::from_xy_major(&grid)),
        }
    }

    /// `Re Σ_k c_k · conj(X^x_k Y^y_k) / d` over the grid, x-major.
    fn xy_scores(&self, c: &[Complex64]) -> Vec<f64> {
        match &self.lattice {
            Some(lat) => lattice_scores(lat, self.d, c, None).0,
            None => self.direct_scores(c),
        }
    }

    fn xy_scores_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        match &self.lattice {
            Some(lat) => {
                let (ra, rb) = lattice_scores(lat, self.d, a, Some(b));
                (ra, rb.expect("paired transform"))
            }
            None => (self.direct_scores(a), self.direct_scores(b)),
        }
    }

    fn direct_scores(&self, c: &[Complex64]) -> Vec<f64> {
        let mut out = vec![0.0; NX * NX];
        let mut t = vec![Complex64::new(0.0, 0.0); self.d];
        for x in 0..NX {
            for (k, tk) in t.iter_mut().enumerate() {
                *tk = c[k] * self.x_pows[x][k].conj();
            }
            for y in 0..NX {
                let yp = &self.y_pows[y];
                let mut acc = 0.0;
                for k in 0..self.d {
                    acc += t[k].re * yp[k].re + t[k].im * yp[k].im;
                }
                out[x * NX + y] = acc / self.d as f64;
            }
        }
        out
    }
}

/// Scatters `a + i·b` onto the phase lattice and runs a pruned 2D DFT.
/// Both inputs are conjugate-symmetric, so the real and imaginary parts of
/// the transform are the two score grids.
fn lattice_scores(lat: &Lattice, d: usize, a: &[Complex64], b: Option<&[Complex64]>) -> (Vec<f64>, Option<Vec<f64>>) {
    let p = lat.period;
    let mut g = vec![Complex64::new(0.0, 0.0); p * p];
    match b {
        Some(b) => {
            for k in 0..d {
                let v = a[k] + Complex64::new(-b[k].im, b[k].re);
                g[lat.ax[k] * p + lat.ay[k]] += v;
            }
        }
        None => {
            for k in 0..d {
                g[lat.ax[k] * p + lat.ay[k]] += a[k];
            }
        }
    }
    let plan = fft::forward_plan(p);
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    for &u in &lat.rows {
        plan.process_with_scratch(&mut g[u * p..(u + 1) * p], &mut scratch);
    }
    let scale = 1.0 / d as f64;
    let mut ra = vec![0.0; NX * NX];
    let mut rb = b.map(|_| vec![0.0; NX * NX]);
    let mut col = vec![Complex64::new(0.0, 0.0); p];
    for y in 0..NX {
        col.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for &u in &lat.rows {
            col[u] = g[u * p + y];
        }
        plan.process_with_scratch(&mut col, &mut scratch);
        for x in 0..NX {
            ra[x * NX + y] = col[x].re * scale;
            if let Some(rb) = rb.as_mut() {
                rb[x * NX + y] = col[x].im * scale;
            }
        }
    }
    (ra, rb)
}

fn argmax_xy(grid: &[f64]) -> (usize, usize, f64) {
    let mut best = Best::new();
    for x in 0..NX {
        for y in 0..NX {
            best.offer(grid[x * NX + y], (x, y, 0, 0));
        }
    }
    (best.key.0, best.key.1, best.score)
}

fn grid_pose(x: usize, y: usize, w: usize, h: usize) -> GridPose {
    GridPose {
        x: x as f64,
        y: y as f64,
        w: w as f64,
        h: h as f64,
    }
}
