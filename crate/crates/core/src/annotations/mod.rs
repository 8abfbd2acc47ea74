//! Upstream annotation formats (OpenPose keypoints, human parsing, DensePose)
//! and the pixel-region primitives the metrics are built on.

mod densepose;
mod keypoints;
mod labels;
mod raster;
mod region;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use densepose::{default_upper_body_parts, load_densepose, DenseposeMap, ARM_PARTS, MAX_PART, TORSO_PARTS};
pub use keypoints::{load_keypoints, Joint, Keypoint, Keypoints, NUM_KEYPOINTS};
pub use labels::{load_label_map, LabelMap, LabelMapMeta, LabelSchema, LabelSet, Role};
pub use raster::{gray_png_bytes, save_gray_png, RgbImage};
pub use region::{region_area, region_intersection_area, IndexMap, Selector};

use crate::error::{Error, Result};

/// One sample's image and its three annotation layers.
#[derive(Debug, Clone)]
pub struct AnnotationBundle {
    pub sample_id: String,
    pub image: RgbImage,
    pub keypoints: Keypoints,
    pub parse: LabelMap,
    pub densepose: DenseposeMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    DimensionMismatch { layer: String, width: usize, height: usize, expected_width: usize, expected_height: usize },
    MissingWaistKeypoint { joint: String },
    MissingShoulderKeypoint { joint: String },
    EmptyUpperClothes,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has_dimension_mismatch(&self) -> bool {
        self.findings.iter().any(|f| matches!(f, Finding::DimensionMismatch { .. }))
    }
}

impl AnnotationBundle {
    pub fn dims(&self) -> (usize, usize) {
        self.image.dims()
    }

    /// Errors with the first layer whose size differs from the image.
    pub fn ensure_consistent(&self) -> Result<()> {
        let want = self.image.dims();
        for (layer, got) in self.layer_dims() {
            if got != want {
                return Err(Error::dims(format!("{} of {}", layer, self.sample_id), want, got));
            }
        }
        Ok(())
    }

    fn layer_dims(&self) -> [(&'static str, (usize, usize)); 3] {
        [
            ("keypoints frame", self.keypoints.dims()),
            ("parse map", self.parse.dims()),
            ("densepose map", self.densepose.dims()),
        ]
    }

    pub fn validate(&self) -> ValidationReport {
        validate_bundle(self)
    }
}

pub fn validate_bundle(bundle: &AnnotationBundle) -> ValidationReport {
    let mut findings = Vec::new();
    let (ew, eh) = bundle.image.dims();
    for (layer, (w, h)) in bundle.layer_dims() {
        if (w, h) != (ew, eh) {
            findings.push(Finding::DimensionMismatch {
                layer: layer.to_string(),
                width: w,
                height: h,
                expected_width: ew,
                expected_height: eh,
            });
        }
    }
    for (joint, name) in [(Joint::MidHip, "MidHip"), (Joint::RHip, "RHip"), (Joint::LHip, "LHip")] {
        if bundle.keypoints.get(joint).is_missing() {
            findings.push(Finding::MissingWaistKeypoint { joint: name.into() });
        }
    }
    for (joint, name) in [(Joint::RShoulder, "RShoulder"), (Joint::LShoulder, "LShoulder")] {
        if bundle.keypoints.get(joint).is_missing() {
            findings.push(Finding::MissingShoulderKeypoint { joint: name.into() });
        }
    }
    let upper = bundle.parse.role_ids(Role::UpperClothes);
    if !bundle.parse.labels().iter().any(|&l| upper.contains(l)) {
        findings.push(Finding::EmptyUpperClothes);
    }
    ValidationReport { findings }
}

/// Label schema and densepose part-set, possibly overridden from a config
/// file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationConfig {
    pub schema: Arc<LabelSchema>,
    pub upper_body_parts: LabelSet,
}

impl Default for AnnotationConfig {
    fn default() -> Self {
        Self { schema: Arc::new(LabelSchema::default()), upper_body_parts: default_upper_body_parts() }
    }
}

/// Role→id-list overrides as written in TOML or JSON config files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaOverrides {
    pub upper_clothes: Option<Vec<u8>>,
    pub lower_clothes: Option<Vec<u8>>,
    pub dress: Option<Vec<u8>>,
    pub face: Option<Vec<u8>>,
    pub hair: Option<Vec<u8>>,
    pub arms: Option<Vec<u8>>,
    pub background: Option<Vec<u8>>,
    pub other: Option<Vec<u8>>,
    pub upper_body_parts: Option<Vec<u8>>,
}

impl SchemaOverrides {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).map_err(|e| Error::malformed(path, e))
        } else {
            toml::from_str(&text).map_err(|e| Error::malformed(path, e))
        }
    }

    /// Applies the overrides to the default schema. Ids claimed by an
    /// overridden role are dropped from the default `other` set unless
    /// `other` itself is overridden.
    pub fn resolve(&self) -> Result<AnnotationConfig> {
        let mut schema = LabelSchema::default();
        let entries = [
            (Role::UpperClothes, &self.upper_clothes),
            (Role::LowerClothes, &self.lower_clothes),
            (Role::Dress, &self.dress),
            (Role::Face, &self.face),
            (Role::Hair, &self.hair),
            (Role::Arms, &self.arms),
            (Role::Background, &self.background),
            (Role::Other, &self.other),
        ];
        for (role, ids) in entries {
            if let Some(ids) = ids {
                *schema.ids_mut(role) = ids.iter().copied().collect();
            }
        }
        if self.other.is_none() {
            let known = schema.known();
            schema.other = schema.other.iter().filter(|id| !known.contains(*id)).collect();
        }
        schema.validate()?;
        let upper_body_parts = match &self.upper_body_parts {
            Some(ids) => ids.iter().copied().collect(),
            None => default_upper_body_parts(),
        };
        if upper_body_parts.contains(0) || upper_body_parts.max().is_some_and(|m| m > MAX_PART) {
            return Err(Error::InvalidParams("upper_body_parts must be within 1..=24".into()));
        }
        Ok(AnnotationConfig { schema: Arc::new(schema), upper_body_parts })
    }
}

/// File locations of one sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundlePaths {
    pub image: PathBuf,
    pub keypoints: PathBuf,
    pub parse: PathBuf,
    pub densepose: PathBuf,
}

impl BundlePaths {
    pub fn missing(&self) -> Vec<PathBuf> {
        [&self.image, &self.keypoints, &self.parse, &self.densepose]
            .into_iter()
            .filter(|p| !p.is_file())
            .cloned()
            .collect()
    }
}

pub fn load_bundle(sample_id: &str, paths: &BundlePaths, config: &AnnotationConfig) -> Result<AnnotationBundle> {
    let image = RgbImage::load(&paths.image)?;
    let keypoints = load_keypoints(&paths.keypoints, image.width(), image.height())?;
    let parse = load_label_map(&paths.parse, config.schema.clone())?;
    let densepose = load_densepose(&paths.densepose, config.upper_body_parts)?;
    Ok(AnnotationBundle { sample_id: sample_id.to_string(), image, keypoints, parse, densepose })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_from_toml_drop_ids_from_other() {
        let o: SchemaOverrides = toml::from_str("upper_clothes = [4, 5]\nupper_body_parts = [1, 2]").unwrap();
        let cfg = o.resolve().unwrap();
        assert!(cfg.schema.upper_clothes.contains(4));
        assert!(!cfg.schema.other.contains(4));
        assert_eq!(cfg.upper_body_parts, LabelSet::from_ids([1, 2]));
    }

    #[test]
    fn overrides_from_json_reject_conflicts() {
        let o: SchemaOverrides = serde_json::from_str(r#"{"face": [5]}"#).unwrap();
        assert!(o.resolve().is_err());
    }

    #[test]
    fn unknown_role_key_rejected() {
        assert!(toml::from_str::<SchemaOverrides>("shoes = [1]").is_err());
    }
}
