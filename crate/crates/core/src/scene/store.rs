//! JSON memory files.
//!
//! A file records the space parameters, the instance poses and the two
//! memory vectors. Pointers and axes are regenerated from the seed; loading
//! re-encodes the memory and rejects the file if it does not reproduce the
//! stored vectors.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::hrr::{HyperVector, RngSeed};

use super::memory::{SSPMemory, VocabEntry};
use super::space::{AxisConfig, SspSpace};
use super::{GridPose, ImageSize, SceneError};

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoredInstance {
    pub object_id: String,
    pub label: String,
    pub pose: GridPose,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemoryFile {
    pub version: u32,
    pub image_id: String,
    pub d: usize,
    pub seed: RngSeed,
    pub axes: AxisConfig,
    pub image: ImageSize,
    pub instances: Vec<StoredInstance>,
    pub m: HyperVector,
    pub loc2d: HyperVector,
}

impl MemoryFile {
    pub fn from_memory(image_id: &str, mem: &SSPMemory) -> Self {
        let space = mem.space();
        Self {
            version: FORMAT_VERSION,
            image_id: image_id.to_string(),
            d: space.d,
            seed: space.seed,
            axes: space.config,
            image: mem.image(),
            instances: mem
                .entries()
                .iter()
                .map(|e| StoredInstance {
                    object_id: e.object_id.clone(),
                    label: e.label.clone(),
                    pose: e.pose,
                })
                .collect(),
            m: mem.m().clone(),
            loc2d: mem.loc2d().clone(),
        }
    }

    /// Rebuilds the memory, reusing `space` when its parameters match.
    pub fn into_memory(self, space: Option<Arc<SspSpace>>) -> Result<SSPMemory, SceneError> {
        if self.version != FORMAT_VERSION {
            return Err(SceneError::Corrupt(format!("unsupported version {}", self.version)));
        }
        if self.m.dim() != self.d || self.loc2d.dim() != self.d {
            return Err(SceneError::Corrupt("vector dimension differs from header".into()));
        }
        let space = match space {
            Some(s) if s.d == self.d && s.seed == self.seed && s.config == self.axes => s,
            _ => SspSpace::new(self.d, self.seed, self.axes)?,
        };
        let mut entries = Vec::with_capacity(self.instances.len());
        for i in self.instances {
            if !i.pose.is_valid() {
                return Err(SceneError::PoseOutOfRange(i.pose));
            }
            entries.push(VocabEntry {
                sp: space.object_sp(&i.label, &i.object_id),
                object_id: i.object_id,
                label: i.label,
                pose: i.pose,
            });
        }
        if entries.is_empty() {
            return Err(SceneError::EmptyScene);
        }
        let mem = SSPMemory::from_entries(entries, self.image, space);
        let scale = self.m.norm().max(1.0);
        if mem.m().max_abs_diff(&self.m) > 1e-9 * scale || mem.loc2d().max_abs_diff(&self.loc2d) > 1e-9 * scale {
            return Err(SceneError::Corrupt("stored vectors do not match the encoded instances".into()));
        }
        Ok(mem)
    }
}

/// A file of one or more memories.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemoryBundle {
    pub memories: Vec<MemoryFile>,
}

pub fn save_memories(path: &Path, memories: &[(String, &SSPMemory)]) -> Result<(), SceneError> {
    let bundle = MemoryBundle {
        memories: memories.iter().map(|(id, m)| MemoryFile::from_memory(id, m)).collect(),
    };
    let text = serde_json::to_string(&bundle).map_err(|e| SceneError::Parse(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| SceneError::Io(format!("{}: {e}", path.display())))
}

pub fn load_memories(path: &Path) -> Result<Vec<(String, SSPMemory)>, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|e| SceneError::Io(format!("{}: {e}", path.display())))?;
    let bundle: MemoryBundle = serde_json::from_str(&text).map_err(|e| SceneError::Parse(e.to_string()))?;
    let mut shared: Option<Arc<SspSpace>> = None;
    let mut out = Vec::with_capacity(bundle.memories.len());
    for f in bundle.memories {
        let id = f.image_id.clone();
        let mem = f.into_memory(shared.clone())?;
        shared = Some(mem.space().clone());
        out.push((id, mem));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{encode_scene, SceneObject};

    #[test]
    fn round_trip_and_tamper_detection() {
        let objs = vec![
            SceneObject::new("a", "cup", 1.0, 2.0, 30.0, 40.0),
            SceneObject::new("b", "table", 50.0, 60.0, 200.0, 100.0),
        ];
        let mem = encode_scene(&objs, 320.0, 240.0, 128, RngSeed(3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_memories(&path, &[("img".to_string(), &mem)]).unwrap();
        let loaded = load_memories(&path).unwrap();
        assert_eq!(loaded[0].0, "img");
        assert!(loaded[0].1.m().max_abs_diff(mem.m()) < 1e-12);

        let mut f = MemoryFile::from_memory("img", &mem);
        f.instances[0].pose.x += 1.0;
        assert!(matches!(f.into_memory(None), Err(SceneError::Corrupt(_))));
    }
}
