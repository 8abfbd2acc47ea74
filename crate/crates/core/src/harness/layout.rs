use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::{Manifest, Pair};
use crate::annotations::BundlePaths;
use crate::error::{Error, Result};

const IMAGE_EXTS: [&str; 3] = ["png", "jpg", "jpeg"];

/// Directory convention for a dataset:
///
/// ```text
/// {root}/image/{id}.png|jpg       {root}/parse/{id}.png
/// {root}/densepose/{id}.png       {root}/openpose/{id}_keypoints.json
/// {root}/generated/{image,parse,densepose,openpose}/{model}__{cloth}...
/// ```
///
/// Generated samples without their own keypoint file inherit the model's.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetLayout {
    pub root: PathBuf,
}

fn with_image_ext(dir: &Path, stem: &str) -> PathBuf {
    IMAGE_EXTS
        .iter()
        .map(|e| dir.join(format!("{stem}.{e}")))
        .find(|p| p.is_file())
        .unwrap_or_else(|| dir.join(format!("{stem}.png")))
}

impl DatasetLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    fn paths_in(&self, base: &Path, stem: &str, keypoints: PathBuf) -> BundlePaths {
        BundlePaths {
            image: with_image_ext(&base.join("image"), stem),
            keypoints,
            parse: base.join("parse").join(format!("{stem}.png")),
            densepose: base.join("densepose").join(format!("{stem}.png")),
        }
    }

    pub fn keypoints_path(&self, id: &str) -> PathBuf {
        self.root.join("openpose").join(format!("{id}_keypoints.json"))
    }

    pub fn real_paths(&self, id: &str) -> BundlePaths {
        self.paths_in(&self.root, id, self.keypoints_path(id))
    }

    pub fn generated_stem(pair: &Pair) -> String {
        format!("{}__{}", pair.model_id, pair.clothing_id)
    }

    pub fn generated_keypoints_path(&self, pair: &Pair) -> PathBuf {
        let stem = Self::generated_stem(pair);
        self.root.join("generated").join("openpose").join(format!("{stem}_keypoints.json"))
    }

    pub fn generated_paths(&self, pair: &Pair) -> BundlePaths {
        let own = self.generated_keypoints_path(pair);
        let kp = if own.is_file() { own } else { self.keypoints_path(&pair.model_id) };
        self.paths_in(&self.root.join("generated"), &Self::generated_stem(pair), kp)
    }

    /// Checks that every file the manifest needs exists and lists those that
    /// do not.
    pub fn resolve(&self, manifest: &Manifest) -> Result<()> {
        if !self.root.is_dir() {
            return Err(Error::DatasetResolutionFailure { missing: vec![self.root.clone()] });
        }
        let mut missing = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for pair in &manifest.entries {
            if seen.insert(pair.clothing_id.as_str()) {
                missing.extend(self.real_paths(&pair.clothing_id).missing());
            }
            missing.extend(self.generated_paths(pair).missing());
        }
        missing.sort();
        missing.dedup();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::DatasetResolutionFailure { missing })
        }
    }
}
