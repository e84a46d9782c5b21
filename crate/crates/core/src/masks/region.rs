//! Masks placed on the image grid as SSP regions, and relation queries.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hrr::{unbind, HyperVector};
use crate::scene::{DecodeStrategy, GridPose, SSPMemory, SspSpace, VocabEntry, XY_MAX};

use super::library::{HypernymTable, MaskLibrary};
use super::mask::{QueryMask, ANCHOR_CELLS, FRAME_CENTER};
use super::MaskError;

const NX: usize = XY_MAX as usize + 1;

/// Smallest w/h used when a decoded anchor collapsed to zero size.
pub const MIN_ANCHOR_SIZE: f64 = 0.5;

/// Grid cells covered by `mask` placed around `anchor`, deduplicated and
/// sorted by `(x, y)`.
///
/// Each active mask cell centre is mapped into grid units: the frame centre
/// goes to the anchor centre and one cell spans `anchor.w·10/50` (columns) or
/// `anchor.h·10/50` (rows) grid units. Cells falling outside `[0, 100]` are
/// dropped.
pub fn region_cells(mask: &QueryMask, anchor: &GridPose) -> Result<Vec<(u32, u32)>, MaskError> {
    if !(anchor.w > 0.0 && anchor.h > 0.0) || !anchor.is_valid() {
        return Err(MaskError::DegenerateAnchor(*anchor));
    }
    let fx = anchor.w * crate::scene::WH_SCALE / ANCHOR_CELLS;
    let fy = anchor.h * crate::scene::WH_SCALE / ANCHOR_CELLS;
    let (cx, cy) = anchor.center();
    let max = f64::from(XY_MAX);
    let mut hit = vec![false; NX * NX];
    for (r, c) in mask.active_cells() {
        let gx = (cx + (c as f64 + 0.5 - FRAME_CENTER) * fx).round();
        let gy = (cy + (r as f64 + 0.5 - FRAME_CENTER) * fy).round();
        if (0.0..=max).contains(&gx) && (0.0..=max).contains(&gy) {
            hit[gx as usize * NX + gy as usize] = true;
        }
    }
    Ok(hit
        .iter()
        .enumerate()
        .filter(|(_, &h)| h)
        .map(|(i, _)| ((i / NX) as u32, (i % NX) as u32))
        .collect())
}

/// Unnormalized spectrum of `Σ X^x ⊛ Y^y` over `cells`.
fn cells_spectrum(cells: &[(u32, u32)], space: &SspSpace) -> Vec<Complex64> {
    let d = space.d;
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![zero; d];
    let mut inner = vec![zero; d];
    let mut i = 0;
    while i < cells.len() {
        let x = cells[i].0;
        inner.iter_mut().for_each(|v| *v = zero);
        while i < cells.len() && cells[i].0 == x {
            let yp = space.grid.y_power(cells[i].1 as usize);
            for k in 0..d {
                inner[k] += yp[k];
            }
            i += 1;
        }
        let xp = space.grid.x_power(x as usize);
        for k in 0..d {
            out[k] += xp[k] * inner[k];
        }
    }
    out
}

/// `Σ X^x ⊛ Y^y` over the region cells, L2-normalized.
pub fn encode_region(mask: &QueryMask, anchor: &GridPose, space: &SspSpace) -> Result<HyperVector, MaskError> {
    let cells = region_cells(mask, anchor)?;
    Ok(HyperVector::from_spectrum(&cells_spectrum(&cells, space)).normalized())
}

/// A region ready for scoring.
///
/// The spectrum is centred: bins where both position axes have zero phase
/// carry the same value for every location, so they add a constant offset of
/// about `cells / d` to every score and are removed.
#[derive(Debug, Clone)]
pub struct Region {
    pub cells: Vec<(u32, u32)>,
    spectrum: Vec<Complex64>,
    /// Mean score of a location inside the region.
    pub in_region_mean: f64,
}

impl Region {
    pub fn build(mask: &QueryMask, anchor: &GridPose, space: &SspSpace) -> Result<Self, MaskError> {
        let cells = region_cells(mask, anchor)?;
        let mut spectrum = cells_spectrum(&cells, space);
        let (px, py) = (space.axes.x.phases(), space.axes.y.phases());
        for k in 0..space.d {
            if px[k] == 0.0 && py[k] == 0.0 {
                spectrum[k] = Complex64::new(0.0, 0.0);
            }
        }
        let norm = (spectrum.iter().map(|c| c.norm_sqr()).sum::<f64>() / space.d as f64).sqrt();
        let in_region_mean = if cells.is_empty() { 0.0 } else { norm / cells.len() as f64 };
        if norm > 0.0 {
            spectrum.iter_mut().for_each(|c| *c /= norm);
        }
        Ok(Self {
            cells,
            spectrum,
            in_region_mean,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn vector(&self) -> HyperVector {
        HyperVector::from_spectrum(&self.spectrum)
    }

    /// Similarity of the unit region with the location `X^x ⊛ Y^y`.
    pub fn score_point(&self, space: &SspSpace, x: u32, y: u32) -> f64 {
        let (xp, yp) = (space.grid.x_power(x as usize), space.grid.y_power(y as usize));
        let mut acc = 0.0;
        for k in 0..space.d {
            acc += (self.spectrum[k] * (xp[k] * yp[k]).conj()).re;
        }
        acc / space.d as f64
    }

    /// Cosine of the unit region with an arbitrary vector.
    pub fn cosine(&self, q: &HyperVector) -> f64 {
        let qs = q.spectrum();
        let d = qs.len() as f64;
        let dot: f64 = qs.iter().zip(&self.spectrum).map(|(a, b)| (a * b.conj()).re).sum::<f64>() / d;
        let n = q.norm();
        if n == 0.0 {
            0.0
        } else {
            dot / n
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionScoring {
    /// Cosine of the unbound 2D location with the region.
    Raw,
    /// Clean up the unbound 2D location to a grid point first, then score
    /// that point against the region.
    CleanedUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelateConfig {
    pub scoring: RegionScoring,
    /// Proposals need a score strictly above this.
    pub min_score: f64,
    /// With cleaned-up scoring, proposals also need at least this fraction of
    /// the region's mean in-region score.
    pub relative_threshold: f64,
    /// Strategy used to decode anchor and proposal poses.
    pub decode: DecodeStrategy,
}

impl Default for RelateConfig {
    fn default() -> Self {
        Self {
            scoring: RegionScoring::CleanedUp,
            min_score: 0.0,
            relative_threshold: 0.5,
            decode: DecodeStrategy::Exhaustive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub label: String,
    pub object_id: String,
    pub score: f64,
    pub pose: GridPose,
}

/// Object that a region is anchored to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub object_id: String,
    pub label: String,
    pub pose: GridPose,
}

impl Anchor {
    fn region_pose(&self) -> GridPose {
        GridPose {
            w: self.pose.w.max(MIN_ANCHOR_SIZE),
            h: self.pose.h.max(MIN_ANCHOR_SIZE),
            ..self.pose
        }
    }
}

/// Region score of one instance.
pub fn instance_score(memory: &SSPMemory, region: &Region, e: &VocabEntry, cfg: &RelateConfig) -> (f64, bool) {
    let space = memory.space();
    match cfg.scoring {
        RegionScoring::CleanedUp => {
            let loc = memory.locate_instance(e);
            let s = region.score_point(space, loc.x, loc.y);
            let pass = s > cfg.min_score && s >= cfg.relative_threshold * region.in_region_mean;
            (s, pass)
        }
        RegionScoring::Raw => {
            let q = unbind(memory.loc2d(), &e.sp).expect("same dimension");
            let s = region.cosine(&q);
            (s, s > cfg.min_score)
        }
    }
}

/// Every instance except the anchor whose location is positively similar to
/// the relation region, best first.
pub fn relate_from(
    memory: &SSPMemory,
    anchor: &Anchor,
    relation: &str,
    lib: &MaskLibrary,
    inverse: bool,
    cfg: &RelateConfig,
) -> Result<Vec<Proposal>, MaskError> {
    let mask = lib.mask_for(relation, inverse)?;
    let region = Region::build(&mask, &anchor.region_pose(), memory.space())?;
    if region.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for e in memory.entries() {
        if e.object_id == anchor.object_id {
            continue;
        }
        let (score, pass) = instance_score(memory, &region, e, cfg);
        if pass {
            out.push(Proposal {
                label: e.label.clone(),
                object_id: e.object_id.clone(),
                score,
                pose: memory.decode_instance(e, cfg.decode).pose,
            });
        }
    }
    out.sort_by(|a, b| b.score.total_cmp(&a.score));
    Ok(out)
}

/// Selects `anchor_label` and runs [`relate_from`] around it.
pub fn relate(
    memory: &SSPMemory,
    anchor_label: &str,
    relation: &str,
    lib: &MaskLibrary,
    inverse: bool,
    cfg: &RelateConfig,
) -> Result<Vec<Proposal>, MaskError> {
    lib.canonical(relation)
        .ok_or_else(|| MaskError::UnknownRelation(relation.to_string()))?;
    let sel = memory
        .select(anchor_label, cfg.decode)
        .ok_or_else(|| MaskError::AnchorNotFound(anchor_label.to_string()))?;
    let anchor = Anchor {
        object_id: sel.object_id,
        label: sel.label,
        pose: sel.result.pose,
    };
    relate_from(memory, &anchor, relation, lib, inverse, cfg)
}

/// The exact-name proposal if any, else the best proposal of the named class.
pub fn relate_name(proposals: &[Proposal], target: &str, hypernyms: &HypernymTable) -> Option<Proposal> {
    let t = super::library::normalize_term(target);
    proposals
        .iter()
        .find(|p| super::library::normalize_term(&p.label) == t)
        .or_else(|| proposals.iter().find(|p| hypernyms.matches(&p.label, target)))
        .cloned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hrr::RngSeed;
    use crate::masks::FRAME;

    fn space() -> std::sync::Arc<SspSpace> {
        SspSpace::with_defaults(1024, RngSeed(2)).unwrap()
    }

    #[test]
    fn single_centre_cell_maps_to_anchor_centre() {
        let s = space();
        let m = QueryMask::from_fn("c", 1, |r, c| r == 250 && c == 250).unwrap();
        let anchor = GridPose { x: 45.0, y: 45.0, w: 1.0, h: 1.0 };
        let v = encode_region(&m, &anchor, &s).unwrap();
        let expect = s.axes.location_vector(50.0, 50.0).normalized();
        assert!(v.max_abs_diff(&expect) < 1e-9);
    }

    #[test]
    fn right_half_prefers_the_right() {
        let s = space();
        let m = QueryMask::from_fn("r", 1, |_, c| c >= FRAME / 2).unwrap();
        let anchor = GridPose { x: 50.0, y: 50.0, w: 5.0, h: 5.0 };
        let v = encode_region(&m, &anchor, &s).unwrap();
        let at = |x: f64, y: f64| v.dot(&s.axes.location_vector(x, y));
        assert!(at(80.0, 50.0) > at(20.0, 50.0));
        let region = Region::build(&m, &anchor, &s).unwrap();
        assert!(region.cells.iter().all(|&(x, _)| x >= 76));
        assert!(region.score_point(&s, 80, 50) > 0.5 * region.in_region_mean);
        assert!(region.score_point(&s, 20, 50) < 0.5 * region.in_region_mean);
    }

    #[test]
    fn zero_size_anchor_is_rejected() {
        let s = space();
        let m = QueryMask::from_fn("r", 1, |_, _| true).unwrap();
        let anchor = GridPose { x: 50.0, y: 50.0, w: 0.0, h: 5.0 };
        assert!(matches!(encode_region(&m, &anchor, &s), Err(MaskError::DegenerateAnchor(_))));
    }

    #[test]
    fn relate_name_priority() {
        let p = |l: &str, s: f64| Proposal {
            label: l.into(),
            object_id: l.into(),
            score: s,
            pose: GridPose { x: 0.0, y: 0.0, w: 1.0, h: 1.0 },
        };
        let h = HypernymTable::bundled();
        assert_eq!(relate_name(&[p("bowl", 0.4), p("hat", 0.3)], "hat", &h).unwrap().label, "hat");
        assert!(relate_name(&[], "hat", &h).is_none());
        assert_eq!(relate_name(&[p("dog", 0.7), p("bed", 0.5)], "furniture", &h).unwrap().label, "bed");
    }
}
