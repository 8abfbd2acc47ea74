//! Skeleton-anchored perceptual distance.
//!
//! Patches are cut around corresponding grid nodes of the real and the
//! virtual try-on, pushed through a five-layer feature backend and compared
//! LPIPS-style: per-location channel normalization, squared difference,
//! averaged. The score averages over the common active nodes and then over
//! the five layers.

mod deterministic;
#[cfg(feature = "onnx")]
mod onnx;

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use deterministic::GradientPyramid;
#[cfg(feature = "onnx")]
pub use onnx::OnnxBackend;

use crate::annotations::RgbImage;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::skeleton::{common_active, NodeStatus, SkeletonGrid};

pub const NUM_LAYERS: usize = 5;

/// Added to feature norms before dividing, as in LPIPS.
const NORM_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchSize {
    pub h: usize,
    pub w: usize,
}

impl Default for PatchSize {
    fn default() -> Self {
        Self { h: 64, w: 64 }
    }
}

impl PatchSize {
    pub fn square(side: usize) -> Self {
        Self { h: side, w: side }
    }

    pub fn validate(&self) -> Result<()> {
        if self.h < 16 || self.w < 16 || !self.h.is_multiple_of(2) || !self.w.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "patch size {}x{} must be even and at least 16",
                self.h, self.w
            )));
        }
        Ok(())
    }
}

/// An `h`×`w` RGB crop centered on a grid node.
#[derive(Clone, PartialEq, Eq)]
pub struct Patch {
    pub node: usize,
    pub size: PatchSize,
    pub pixels: Vec<u8>,
}

impl std::fmt::Debug for Patch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Patch(node {}, {}x{})", self.node, self.size.h, self.size.w)
    }
}

impl Patch {
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.size.w + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

/// Mirror index into `0..n` without repeating the edge sample.
fn reflect(i: i64, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as i64 - 1);
    let m = i.rem_euclid(period);
    (if m >= n as i64 { period - m } else { m }) as usize
}

pub fn extract_patch(image: &RgbImage, center: (usize, usize), node: usize, size: PatchSize) -> Patch {
    let (w, h) = image.dims();
    let x0 = center.0 as i64 - (size.w / 2) as i64;
    let y0 = center.1 as i64 - (size.h / 2) as i64;
    let mut pixels = Vec::with_capacity(size.h * size.w * 3);
    for dy in 0..size.h as i64 {
        let y = reflect(y0 + dy, h);
        for dx in 0..size.w as i64 {
            pixels.extend_from_slice(&image.get(reflect(x0 + dx, w), y));
        }
    }
    Patch { node, size, pixels }
}

/// One patch per index, centered on the rounded node position.
pub fn extract_patches<T: Real>(
    image: &RgbImage,
    grid: &SkeletonGrid<T>,
    indices: &[usize],
    size: PatchSize,
) -> Result<Vec<Patch>> {
    if indices.is_empty() {
        return Err(Error::NoActiveNodes);
    }
    size.validate()?;
    let (w, h) = image.dims();
    indices
        .iter()
        .map(|&i| {
            let node = grid.nodes.get(i).ok_or_else(|| Error::InvalidParams(format!("node index {i} out of range")))?;
            if node.status != NodeStatus::Active {
                return Err(Error::InvalidParams(format!("node {i} is not active")));
            }
            Ok(extract_patch(image, node.position.pixel_clamped(w, h), i, size))
        })
        .collect()
}

/// Channel-major feature tensor of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<T> {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<T>,
}

impl<T: Real> FeatureMap<T> {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self { channels, height, width, data: vec![T::zero(); channels * height * width] }
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> T {
        self.data[(c * self.height + y) * self.width + x]
    }

    fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    /// Divides each spatial location's channel vector by its L2 norm.
    pub fn unit_normalized(&self) -> Self {
        let mut out = self.clone();
        let plane = self.height * self.width;
        let eps = T::lit(NORM_EPS);
        for p in 0..plane {
            let norm = (0..self.channels).map(|c| self.data[c * plane + p].powi(2)).fold(T::zero(), |a, b| a + b).sqrt();
            for c in 0..self.channels {
                out.data[c * plane + p] = self.data[c * plane + p] / (norm + eps);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendInfo {
    pub id: String,
    pub channels: [usize; NUM_LAYERS],
    pub deterministic: bool,
}

impl BackendInfo {
    pub fn layer_count(&self) -> usize {
        self.channels.len()
    }
}

/// A five-layer feature extractor. Implementations must be usable from
/// several threads at once and give identical output for identical input.
pub trait FeatureBackend<T: Real>: Send + Sync {
    fn info(&self) -> &BackendInfo;

    fn features(&self, patch: &Patch) -> Result<Vec<FeatureMap<T>>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    ReferenceVgg,
    DeterministicTest,
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::ReferenceVgg => "reference-vgg",
            BackendKind::DeterministicTest => "deterministic-test",
        }
    }
}

impl FromStr for BackendKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference-vgg" => Ok(BackendKind::ReferenceVgg),
            "deterministic-test" => Ok(BackendKind::DeterministicTest),
            other => Err(Error::InvalidParams(format!("unknown backend `{other}`"))),
        }
    }
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn load_backend<T: Real>(kind: BackendKind, model_path: Option<&Path>) -> Result<Box<dyn FeatureBackend<T>>> {
    match kind {
        BackendKind::DeterministicTest => Ok(Box::new(GradientPyramid)),
        BackendKind::ReferenceVgg => {
            let path = model_path.ok_or_else(|| Error::ModelLoadFailure {
                path: "<none>".into(),
                reason: "reference-vgg needs a model file".into(),
            })?;
            load_reference(path)
        }
    }
}

#[cfg(feature = "onnx")]
fn load_reference<T: Real>(path: &Path) -> Result<Box<dyn FeatureBackend<T>>> {
    Ok(Box::new(OnnxBackend::load(path)?))
}

#[cfg(not(feature = "onnx"))]
fn load_reference<T: Real>(path: &Path) -> Result<Box<dyn FeatureBackend<T>>> {
    Err(Error::ModelLoadFailure { path: path.to_path_buf(), reason: "built without the `onnx` feature".into() })
}

/// Learned per-channel weights for each layer, applied to the squared
/// normalized difference before spatial averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearWeights {
    pub layers: Vec<Vec<f64>>,
}

impl LinearWeights {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::malformed(path, e))
    }

    pub fn check(&self, info: &BackendInfo) -> Result<()> {
        let shape: Vec<usize> = self.layers.iter().map(Vec::len).collect();
        if shape != info.channels {
            return Err(Error::InvalidParams(format!(
                "linear weights shaped {shape:?} do not match backend channels {:?}",
                info.channels
            )));
        }
        Ok(())
    }
}

/// Distance between two feature maps of the same layer. With no weights the
/// squared difference is averaged over space and channels.
pub fn feature_distance<T: Real>(a: &FeatureMap<T>, b: &FeatureMap<T>, weights: Option<&[f64]>) -> Result<T> {
    if a.shape() != b.shape() {
        return Err(Error::BackendFailure(format!("feature shapes differ: {:?} vs {:?}", a.shape(), b.shape())));
    }
    let (na, nb) = (a.unit_normalized(), b.unit_normalized());
    let plane = a.height * a.width;
    let mut total = T::zero();
    for c in 0..a.channels {
        let mut acc = T::zero();
        for p in 0..plane {
            let d = na.data[c * plane + p] - nb.data[c * plane + p];
            acc = acc + d * d;
        }
        total = total + acc * weights.map_or(T::one(), |w| T::lit(w[c]));
    }
    let denom = match weights {
        Some(_) => T::of_usize(plane),
        None => T::of_usize(plane * a.channels),
    };
    Ok(total / denom)
}

/// Distance at layer `layer` (1-based) between two patches.
pub fn layer_distance<T: Real>(backend: &dyn FeatureBackend<T>, layer: usize, a: &Patch, b: &Patch) -> Result<T> {
    if !(1..=NUM_LAYERS).contains(&layer) {
        return Err(Error::InvalidParams(format!("layer {layer} outside 1..=5")));
    }
    if a.size != b.size {
        return Err(Error::InvalidParams("patches differ in size".into()));
    }
    let fa = backend.features(a)?;
    let fb = backend.features(b)?;
    feature_distance(&fa[layer - 1], &fb[layer - 1], None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlpipsScore<T> {
    pub value: T,
    pub n_nodes: usize,
    pub per_layer: [T; NUM_LAYERS],
}

impl<T: Real> SlpipsScore<T> {
    /// Averages a `nodes × layers` table of distances.
    pub fn from_distances(rows: &[[T; NUM_LAYERS]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::NoActiveNodes);
        }
        let n = T::of_usize(rows.len());
        let per_layer: [T; NUM_LAYERS] =
            std::array::from_fn(|j| rows.iter().map(|r| r[j]).fold(T::zero(), |a, b| a + b) / n);
        let value = per_layer.iter().copied().fold(T::zero(), |a, b| a + b) / T::of_usize(NUM_LAYERS);
        Ok(Self { value, n_nodes: rows.len(), per_layer })
    }
}

/// S-LPIPS evaluator bound to a backend and patch geometry.
pub struct Slpips<'a, T: Real> {
    pub backend: &'a dyn FeatureBackend<T>,
    pub patch: PatchSize,
    pub weights: Option<&'a LinearWeights>,
}

impl<'a, T: Real> Slpips<'a, T> {
    pub fn new(backend: &'a dyn FeatureBackend<T>, patch: PatchSize) -> Self {
        Self { backend, patch, weights: None }
    }

    pub fn with_weights(mut self, weights: &'a LinearWeights) -> Result<Self> {
        weights.check(self.backend.info())?;
        self.weights = Some(weights);
        Ok(self)
    }

    /// Per-layer distances between two patches.
    pub fn patch_distances(&self, a: &Patch, b: &Patch) -> Result<[T; NUM_LAYERS]> {
        let fa = self.backend.features(a)?;
        let fb = self.backend.features(b)?;
        if fa.len() != NUM_LAYERS || fb.len() != NUM_LAYERS {
            return Err(Error::BackendFailure(format!("backend returned {} layers", fa.len())));
        }
        let mut out = [T::zero(); NUM_LAYERS];
        for j in 0..NUM_LAYERS {
            let w = self.weights.map(|lw| lw.layers[j].as_slice());
            out[j] = feature_distance(&fa[j], &fb[j], w)?;
        }
        Ok(out)
    }

    /// Score over an explicit node list; the order of `indices` does not
    /// affect the result.
    pub fn score_nodes(
        &self,
        image_r: &RgbImage,
        image_v: &RgbImage,
        grid_r: &SkeletonGrid<T>,
        grid_v: &SkeletonGrid<T>,
        indices: &[usize],
    ) -> Result<SlpipsScore<T>> {
        if grid_r.nodes.len() != grid_v.nodes.len() {
            return Err(Error::InvalidParams("grids have different topologies".into()));
        }
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let pr = extract_patches(image_r, grid_r, &sorted, self.patch)?;
        let pv = extract_patches(image_v, grid_v, &sorted, self.patch)?;
        let rows = pr.iter().zip(&pv).map(|(a, b)| self.patch_distances(a, b)).collect::<Result<Vec<_>>>()?;
        SlpipsScore::from_distances(&rows)
    }

    pub fn score(
        &self,
        image_r: &RgbImage,
        image_v: &RgbImage,
        grid_r: &SkeletonGrid<T>,
        grid_v: &SkeletonGrid<T>,
    ) -> Result<SlpipsScore<T>> {
        let common = common_active(grid_r, grid_v);
        self.score_nodes(image_r, image_v, grid_r, grid_v, &common)
    }
}

/// S-LPIPS with unit channel weights.
pub fn slpips<T: Real>(
    image_r: &RgbImage,
    image_v: &RgbImage,
    grid_r: &SkeletonGrid<T>,
    grid_v: &SkeletonGrid<T>,
    backend: &dyn FeatureBackend<T>,
    patch: PatchSize,
) -> Result<SlpipsScore<T>> {
    Slpips::new(backend, patch).score(image_r, image_v, grid_r, grid_v)
}
