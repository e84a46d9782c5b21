use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hrr::{unbind, HyperVector, RngSeed};

use super::cleanup::{DecodeResult, DecodeStrategy, LocationResult};
use super::pose::normalize_object;
use super::space::SspSpace;
use super::{GridPose, ImageSize, SceneError, SceneObject};

/// One encoded object instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub object_id: String,
    pub label: String,
    pub sp: HyperVector,
    pub pose: GridPose,
}

/// Result of selecting a label: the best-scoring instance and its decode.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub object_id: String,
    pub label: String,
    pub result: DecodeResult,
}

/// Superposed scene memory `M = Σ SP_i ⊛ X^x ⊛ Y^y ⊛ W^w ⊛ H^h`, plus the
/// 2D location memory `Σ SP_i ⊛ X^cx ⊛ Y^cy` over box centres, used for
/// region queries.
#[derive(Debug, Clone)]
pub struct SSPMemory {
    space: Arc<SspSpace>,
    m: HyperVector,
    loc2d: HyperVector,
    entries: Vec<VocabEntry>,
    image: ImageSize,
}

impl SSPMemory {
    pub fn encode(objects: &[SceneObject], image: ImageSize, space: Arc<SspSpace>) -> Result<Self, SceneError> {
        if objects.is_empty() {
            return Err(SceneError::EmptyScene);
        }
        let mut seen = HashSet::new();
        let mut entries = Vec::with_capacity(objects.len());
        for o in objects {
            if !seen.insert(o.object_id.as_str()) {
                return Err(SceneError::DuplicateObjectId(o.object_id.clone()));
            }
            let pose = normalize_object(image, o)?;
            entries.push(VocabEntry {
                object_id: o.object_id.clone(),
                label: o.label.clone(),
                sp: space.object_sp(&o.label, &o.object_id),
                pose,
            });
        }
        Ok(Self::from_entries(entries, image, space))
    }

    /// Builds the memory vectors for already-normalized entries.
    pub fn from_entries(entries: Vec<VocabEntry>, image: ImageSize, space: Arc<SspSpace>) -> Self {
        let d = space.d;
        let zero = Complex64::new(0.0, 0.0);
        let (mut ms, mut ls) = (vec![zero; d], vec![zero; d]);
        for e in &entries {
            let sp = e.sp.spectrum();
            let pose = space.axes.pose_spectrum(&e.pose);
            let (cx, cy) = e.pose.center();
            let loc = space.axes.location_spectrum(cx, cy);
            for k in 0..d {
                ms[k] += sp[k] * pose[k];
                ls[k] += sp[k] * loc[k];
            }
        }
        Self {
            m: HyperVector::from_spectrum(&ms),
            loc2d: HyperVector::from_spectrum(&ls),
            entries,
            image,
            space,
        }
    }

    pub fn space(&self) -> &Arc<SspSpace> {
        &self.space
    }

    pub fn d(&self) -> usize {
        self.space.d
    }

    pub fn m(&self) -> &HyperVector {
        &self.m
    }

    pub fn loc2d(&self) -> &HyperVector {
        &self.loc2d
    }

    pub fn image(&self) -> ImageSize {
        self.image
    }

    /// Grid units per pixel.
    pub fn scale(&self) -> f64 {
        self.image.scale()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn labels(&self) -> BTreeSet<&str> {
        self.entries.iter().map(|e| e.label.as_str()).collect()
    }

    pub fn contains_label(&self, label: &str) -> bool {
        self.entries.iter().any(|e| e.label == label)
    }

    pub fn instances<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a VocabEntry> + 'a {
        self.entries.iter().filter(move |e| e.label == label)
    }

    pub fn entry(&self, object_id: &str) -> Option<&VocabEntry> {
        self.entries.iter().find(|e| e.object_id == object_id)
    }

    /// `SP ⊛ S(pose)` for one entry.
    pub fn bound_vector(&self, e: &VocabEntry) -> HyperVector {
        crate::hrr::bind(&e.sp, &self.space.axes.pose_vector(&e.pose)).expect("same dimension")
    }

    /// Decodes one instance from `M`.
    pub fn decode_instance(&self, e: &VocabEntry, strategy: DecodeStrategy) -> DecodeResult {
        let q = unbind(&self.m, &e.sp).expect("same dimension");
        self.space.grid.decode(&q, strategy, false).expect("same dimension")
    }

    /// Decodes one instance's box centre from the 2D location memory.
    pub fn locate_instance(&self, e: &VocabEntry) -> LocationResult {
        let q = unbind(&self.loc2d, &e.sp).expect("same dimension");
        self.space.grid.decode_location(&q).expect("same dimension")
    }

    /// Unbinds every instance of `label` and returns the best-scoring one,
    /// or `None` when the label is not in the scene.
    pub fn select(&self, label: &str, strategy: DecodeStrategy) -> Option<Selection> {
        let mut best: Option<Selection> = None;
        for e in self.instances(label) {
            let result = self.decode_instance(e, strategy);
            if best.as_ref().is_none_or(|b| result.score > b.result.score) {
                best = Some(Selection {
                    object_id: e.object_id.clone(),
                    label: e.label.clone(),
                    result,
                });
            }
        }
        best
    }
}

/// Encodes a scene with default axes for dimension `d` and `seed`.
pub fn encode_scene(
    objects: &[SceneObject],
    image_w: f64,
    image_h: f64,
    d: usize,
    seed: RngSeed,
) -> Result<SSPMemory, SceneError> {
    let image = ImageSize::new(image_w, image_h)?;
    let space = SspSpace::with_defaults(d, seed)?;
    SSPMemory::encode(objects, image, space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hrr::superpose;

    fn objects() -> Vec<SceneObject> {
        vec![
            SceneObject::new("1", "lamp", 10.0, 20.0, 50.0, 80.0),
            SceneObject::new("2", "bed", 100.0, 150.0, 300.0, 200.0),
            SceneObject::new("3", "lamp", 500.0, 20.0, 40.0, 90.0),
        ]
    }

    #[test]
    fn memory_is_sum_of_bound_pairs() {
        let mem = encode_scene(&objects(), 640.0, 480.0, 256, RngSeed(1)).unwrap();
        let parts: Vec<HyperVector> = mem.entries().iter().map(|e| mem.bound_vector(e)).collect();
        assert!(superpose(&parts).unwrap().max_abs_diff(mem.m()) < 1e-12);
        assert_eq!(mem.instances("lamp").count(), 2);
        assert!((mem.scale() - 100.0 / 640.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(encode_scene(&[], 10.0, 10.0, 64, RngSeed(0)), Err(SceneError::EmptyScene)));
        let dup = vec![objects()[0].clone(), objects()[0].clone()];
        assert!(matches!(
            encode_scene(&dup, 640.0, 480.0, 64, RngSeed(0)),
            Err(SceneError::DuplicateObjectId(_))
        ));
    }

    #[test]
    fn select_absent_is_none() {
        let mem = encode_scene(&objects(), 640.0, 480.0, 256, RngSeed(1)).unwrap();
        assert!(mem.select("unicorn", DecodeStrategy::Exhaustive).is_none());
        assert!(mem.select("bed", DecodeStrategy::Exhaustive).is_some());
    }
}
