//! Dataset manifests: where a sequence's frames and ground truth live.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats;
use crate::io;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CameraClass {
    #[default]
    AtSea,
    OnShore,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    /// Relative paths are resolved against the manifest's directory.
    pub frames: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_gt: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objects_gt: Option<PathBuf>,
    #[serde(default)]
    pub camera: CameraClass,
}

/// A manifest whose paths are resolved and whose frames were listed.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub frames: Vec<(u64, PathBuf)>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Dataset> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::ManifestInvalid(format!("{}: {e}", path.display())))?;
        let mut m: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::ManifestInvalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        // joining an absolute path yields it unchanged
        m.frames = base.join(&m.frames);
        m.horizon_gt = m.horizon_gt.map(|p| base.join(p));
        m.objects_gt = m.objects_gt.map(|p| base.join(p));
        m.into_dataset()
    }

    /// Checks the invariants: at least one readable frame, ground-truth frame
    /// indices all present.
    pub fn into_dataset(self) -> Result<Dataset> {
        let invalid = |msg: String| Error::ManifestInvalid(format!("{}: {msg}", self.name));
        if !self.frames.is_dir() {
            return Err(invalid(format!("frames directory {} does not exist", self.frames.display())));
        }
        let frames = io::list_frames(&self.frames).map_err(|e| invalid(e.to_string()))?;
        let Some((_, first)) = frames.first() else {
            return Err(invalid(format!("no frames in {}", self.frames.display())));
        };
        io::read_frame(first).map_err(|e| invalid(e.to_string()))?;
        let known = |i: u64| frames.binary_search_by_key(&i, |f| f.0).is_ok();
        if let Some(p) = &self.horizon_gt {
            let gt = formats::read_horizon_csv(p).map_err(|e| invalid(e.to_string()))?;
            if let Some(r) = gt.iter().find(|r| !known(r.frame_index)) {
                return Err(invalid(format!("horizon ground truth references missing frame {}", r.frame_index)));
            }
        }
        if let Some(p) = &self.objects_gt {
            let gt = formats::read_objects_csv(p).map_err(|e| invalid(e.to_string()))?;
            if let Some(r) = gt.iter().find(|r| !known(r.frame_index)) {
                return Err(invalid(format!("object ground truth references missing frame {}", r.frame_index)));
            }
        }
        Ok(Dataset { manifest: self, frames })
    }
}
