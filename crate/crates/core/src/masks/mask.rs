use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MaskError;

/// Side of the square anchor frame, in cells.
pub const FRAME: usize = 500;
/// Side of the normalized anchor box, in cells.
pub const ANCHOR_CELLS: f64 = 50.0;
/// Frame centre coordinate, where the anchor centre is placed.
pub const FRAME_CENTER: f64 = 250.0;

/// Default binarization threshold on per-cell frequency.
pub const DEFAULT_THRESHOLD: f64 = 0.05;
/// Default minimum number of samples per relation.
pub const DEFAULT_MIN_SAMPLES: usize = 1000;

/// Pixel box, top-left corner plus size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxPx {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// One annotated relation instance: the relative box relative to the anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationSample {
    pub relation: String,
    pub anchor_box: BoxPx,
    pub relative_box: BoxPx,
}

impl RelationSample {
    fn is_valid(&self) -> bool {
        let ok = |b: &BoxPx| [b.x, b.y, b.w, b.h].iter().all(|v| v.is_finite()) && b.w > 0.0 && b.h > 0.0;
        ok(&self.anchor_box) && ok(&self.relative_box)
    }

    /// Half-open cell ranges `(rows, cols)` covered by the relative box once
    /// the anchor is scaled to 50×50 cells and centred in the frame. A cell is
    /// covered when its centre lies inside the transformed box.
    pub fn cell_ranges(&self) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let a = &self.anchor_box;
        let r = &self.relative_box;
        let (sx, sy) = (ANCHOR_CELLS / a.w, ANCHOR_CELLS / a.h);
        let (acx, acy) = (a.x + a.w / 2.0, a.y + a.h / 2.0);
        let x0 = FRAME_CENTER + (r.x - acx) * sx;
        let x1 = FRAME_CENTER + (r.x + r.w - acx) * sx;
        let y0 = FRAME_CENTER + (r.y - acy) * sy;
        let y1 = FRAME_CENTER + (r.y + r.h - acy) * sy;
        (span(y0, y1), span(x0, x1))
    }
}

/// Cells `c` with `lo <= c + 0.5 < hi`, clipped to the frame.
fn span(lo: f64, hi: f64) -> std::ops::Range<usize> {
    let first = (lo - 0.5).ceil().max(0.0);
    let end = (hi - 0.5).ceil().min(FRAME as f64);
    if end <= first {
        0..0
    } else {
        first as usize..end as usize
    }
}

/// Per-cell sample counts in the anchor frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulator {
    counts: Vec<u32>,
    samples: usize,
}

impl Default for Accumulator {
    fn default() -> Self {
        Self {
            counts: vec![0; FRAME * FRAME],
            samples: 0,
        }
    }
}

impl Accumulator {
    pub fn add(&mut self, s: &RelationSample) {
        let (rows, cols) = s.cell_ranges();
        for r in rows {
            for c in cols.clone() {
                self.counts[r * FRAME + c] += 1;
            }
        }
        self.samples += 1;
    }

    pub fn merge(mut self, other: Accumulator) -> Accumulator {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.samples += other.samples;
        self
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn count(&self, row: usize, col: usize) -> u32 {
        self.counts[row * FRAME + col]
    }

    /// Cells whose frequency is at least `threshold`.
    pub fn binarize(&self, threshold: f64) -> Vec<bool> {
        let n = self.samples.max(1) as f64;
        self.counts.iter().map(|&c| f64::from(c) / n >= threshold).collect()
    }
}

/// Binary 500×500 template of where related objects lie around a normalized anchor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryMask {
    relation: String,
    cells: Vec<bool>,
    sample_count: usize,
}

impl QueryMask {
    pub fn new(relation: impl Into<String>, cells: Vec<bool>, sample_count: usize) -> Result<Self, MaskError> {
        let relation = relation.into();
        if cells.len() != FRAME * FRAME {
            return Err(MaskError::Format(format!(
                "mask {relation} has {} cells, expected {}",
                cells.len(),
                FRAME * FRAME
            )));
        }
        if !cells.iter().any(|&c| c) {
            return Err(MaskError::EmptyMask(relation));
        }
        Ok(Self {
            relation,
            cells,
            sample_count,
        })
    }

    /// Builds a mask from a predicate over `(row, col)`.
    pub fn from_fn(relation: &str, sample_count: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self, MaskError> {
        let mut cells = vec![false; FRAME * FRAME];
        for r in 0..FRAME {
            for c in 0..FRAME {
                cells[r * FRAME + c] = f(r, c);
            }
        }
        Self::new(relation, cells, sample_count)
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * FRAME + col]
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn active_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn active_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(i, _)| (i / FRAME, i % FRAME))
    }

    /// Mean `(row, col)` of the active cells, in cell-centre coordinates.
    pub fn centroid(&self) -> (f64, f64) {
        let (mut r, mut c, mut n) = (0.0, 0.0, 0.0);
        for (row, col) in self.active_cells() {
            r += row as f64 + 0.5;
            c += col as f64 + 0.5;
            n += 1.0;
        }
        (r / n, c / n)
    }

    /// The mask rotated by 180° about the frame centre, renamed.
    pub fn rotated_180(&self, relation: impl Into<String>) -> QueryMask {
        let mut cells = self.cells.clone();
        cells.reverse();
        QueryMask {
            relation: relation.into(),
            cells,
            sample_count: self.sample_count,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(FRAME * (FRAME + 1) + 64);
        let _ = writeln!(out, "relation={}", self.relation);
        let _ = writeln!(out, "size={FRAME}x{FRAME}");
        let _ = writeln!(out, "samples={}", self.sample_count);
        for row in self.cells.chunks(FRAME) {
            out.extend(row.iter().map(|&c| if c { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, MaskError> {
        let mut lines = text.lines();
        let mut header = |key: &str| -> Result<String, MaskError> {
            let line = lines.next().ok_or_else(|| MaskError::Format(format!("missing {key} line")))?;
            line.strip_prefix(key)
                .and_then(|l| l.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| MaskError::Format(format!("expected `{key}=`, found `{line}`")))
        };
        let relation = header("relation")?;
        let size = header("size")?;
        let samples = header("samples")?;
        if size != format!("{FRAME}x{FRAME}") {
            return Err(MaskError::Format(format!("unsupported size {size}")));
        }
        let sample_count = samples
            .trim()
            .parse()
            .map_err(|_| MaskError::Format(format!("bad sample count `{samples}`")))?;
        let mut cells = Vec::with_capacity(FRAME * FRAME);
        let mut rows = 0;
        for line in lines {
            if line.is_empty() {
                continue;
            }
            rows += 1;
            if line.len() != FRAME {
                return Err(MaskError::Format(format!("row {rows} has {} columns", line.len())));
            }
            for ch in line.chars() {
                cells.push(match ch {
                    '0' => false,
                    '1' => true,
                    other => return Err(MaskError::Format(format!("invalid cell `{other}` in row {rows}"))),
                });
            }
        }
        if rows != FRAME {
            return Err(MaskError::Format(format!("expected {FRAME} rows, found {rows}")));
        }
        QueryMask::new(relation, cells, sample_count)
    }
}

pub fn save_mask(path: &Path, mask: &QueryMask) -> Result<(), MaskError> {
    std::fs::write(path, mask.to_text()).map_err(|e| MaskError::Io(format!("{}: {e}", path.display())))
}

pub fn load_mask(path: &Path) -> Result<QueryMask, MaskError> {
    let text = std::fs::read_to_string(path).map_err(|e| MaskError::Io(format!("{}: {e}", path.display())))?;
    QueryMask::from_text(&text)
}

/// Accumulates the samples of one relation in parallel.
pub fn accumulate(samples: &[RelationSample]) -> Accumulator {
    samples
        .par_iter()
        .filter(|s| s.is_valid())
        .fold(Accumulator::default, |mut acc, s| {
            acc.add(s);
            acc
        })
        .reduce(Accumulator::default, Accumulator::merge)
}

/// Learns a binary mask: cells covered in at least `threshold` of the samples.
pub fn learn_mask(
    relation: &str,
    samples: &[RelationSample],
    threshold: f64,
    min_samples: usize,
) -> Result<QueryMask, MaskError> {
    let valid = samples.iter().filter(|s| s.is_valid()).count();
    if valid < min_samples {
        return Err(MaskError::TooFewSamples {
            relation: relation.to_string(),
            found: valid,
            required: min_samples,
        });
    }
    let acc = accumulate(samples);
    QueryMask::new(relation, acc.binarize(threshold), acc.samples())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(anchor: BoxPx, rel: BoxPx) -> RelationSample {
        RelationSample {
            relation: "r".into(),
            anchor_box: anchor,
            relative_box: rel,
        }
    }

    #[test]
    fn anchor_maps_to_central_block() {
        let a = BoxPx { x: 10.0, y: 30.0, w: 20.0, h: 80.0 };
        let (rows, cols) = sample(a, a).cell_ranges();
        assert_eq!(rows, 225..275);
        assert_eq!(cols, 225..275);
    }

    #[test]
    fn repeated_sample_reproduces_its_box() {
        let a = BoxPx { x: 100.0, y: 100.0, w: 50.0, h: 50.0 };
        let r = BoxPx { x: 150.0, y: 90.0, w: 30.0, h: 70.0 };
        let s = sample(a, r);
        let samples = vec![s.clone(); 1000];
        let m = learn_mask("r", &samples, DEFAULT_THRESHOLD, DEFAULT_MIN_SAMPLES).unwrap();
        let (rows, cols) = s.cell_ranges();
        assert_eq!(m.active_count(), rows.len() * cols.len());
        assert!(m.active_cells().all(|(r, c)| rows.contains(&r) && cols.contains(&c)));
        assert_eq!(m.sample_count(), 1000);
    }

    #[test]
    fn too_few_samples_and_empty_masks() {
        let a = BoxPx { x: 0.0, y: 0.0, w: 10.0, h: 10.0 };
        let far = BoxPx { x: 5000.0, y: 0.0, w: 10.0, h: 10.0 };
        assert!(matches!(
            learn_mask("r", &[sample(a, a)], 0.05, 2),
            Err(MaskError::TooFewSamples { found: 1, required: 2, .. })
        ));
        assert!(matches!(learn_mask("r", &[sample(a, far)], 0.05, 1), Err(MaskError::EmptyMask(_))));
    }

    #[test]
    fn text_round_trip_and_errors() {
        let m = QueryMask::from_fn("to the right of", 7, |r, c| c >= 275 && (200..300).contains(&r)).unwrap();
        let text = m.to_text();
        assert_eq!(QueryMask::from_text(&text).unwrap(), m);
        let truncated: String = text.lines().take(400).collect::<Vec<_>>().join("\n");
        assert!(matches!(QueryMask::from_text(&truncated), Err(MaskError::Format(_))));
        assert!(QueryMask::from_text("relation=x\nsize=10x10\nsamples=1\n").is_err());
    }

    #[test]
    fn rotation_is_an_involution() {
        let m = QueryMask::from_fn("r", 1, |r, c| r < 10 && c > 480).unwrap();
        let rot = m.rotated_180("r2");
        assert!(rot.get(FRAME - 1 - 5, FRAME - 1 - 490));
        assert_eq!(rot.rotated_180("r").cells(), m.cells());
    }
}
