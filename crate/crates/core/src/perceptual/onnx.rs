//! Five-output feature network loaded from an ONNX file.
//!
//! The network takes `[1, 3, H, W]` float input in `[0, 1]` and returns the
//! five stage activations as `[1, C, H', W']`. Any input normalization is
//! expected to be part of the exported graph. One optimized plan is built and
//! cached per patch size.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use tract_onnx::prelude::*;

use super::{BackendInfo, FeatureBackend, FeatureMap, Patch, PatchSize, NUM_LAYERS};
use crate::error::{Error, Result};
use crate::scalar::Real;

type Plan = Arc<TypedRunnableModel>;

pub struct OnnxBackend {
    path: PathBuf,
    model: InferenceModel,
    plans: RwLock<HashMap<(usize, usize), Plan>>,
    info: BackendInfo,
}

impl std::fmt::Debug for OnnxBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OnnxBackend").field("path", &self.path).field("info", &self.info).finish()
    }
}

fn load_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::ModelLoadFailure { path: path.to_path_buf(), reason: e.to_string() }
}

fn compile(model: &InferenceModel, size: PatchSize) -> TractResult<Plan> {
    model
        .clone()
        .with_input_fact(0, f32::fact([1, 3, size.h, size.w]).into())?
        .into_optimized()?
        .into_runnable()
}

impl OnnxBackend {
    /// Loads the network and checks that it has five outputs by running a
    /// 64×64 probe, which also records each layer's channel count.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(load_err(path, "file not found"));
        }
        let model = tract_onnx::onnx().model_for_path(path).map_err(|e| load_err(path, format!("{e:#}")))?;
        let n_out = model.output_outlets().map_err(|e| load_err(path, e))?.len();
        if n_out != NUM_LAYERS {
            return Err(Error::WrongOutputArity { got: n_out });
        }
        let probe = PatchSize::square(64);
        let plan = compile(&model, probe).map_err(|e| load_err(path, format!("{e:#}")))?;
        let input = Tensor::from_shape(&[1, 3, probe.h, probe.w], &vec![0.5f32; 3 * probe.h * probe.w])
            .map_err(|e| load_err(path, e))?;
        let outs = plan.run(tvec!(input.into())).map_err(|e| load_err(path, format!("{e:#}")))?;
        let mut channels = [0usize; NUM_LAYERS];
        for (c, t) in channels.iter_mut().zip(outs.iter()) {
            if t.shape().len() != 4 || t.shape()[0] != 1 {
                return Err(load_err(path, format!("output shaped {:?}, want [1, C, H, W]", t.shape())));
            }
            *c = t.shape()[1];
        }
        let id = format!("reference-vgg:{}", path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default());
        let mut plans = HashMap::new();
        plans.insert((probe.h, probe.w), plan);
        Ok(Self {
            path: path.to_path_buf(),
            model,
            plans: RwLock::new(plans),
            info: BackendInfo { id, channels, deterministic: true },
        })
    }

    fn plan(&self, size: PatchSize) -> Result<Plan> {
        let key = (size.h, size.w);
        if let Some(p) = self.plans.read().expect("plan cache poisoned").get(&key) {
            return Ok(p.clone());
        }
        let plan = compile(&self.model, size).map_err(|e| Error::BackendFailure(format!("{e:#}")))?;
        Ok(self.plans.write().expect("plan cache poisoned").entry(key).or_insert(plan).clone())
    }
}

impl<T: Real> FeatureBackend<T> for OnnxBackend {
    fn info(&self) -> &BackendInfo {
        &self.info
    }

    fn features(&self, patch: &Patch) -> Result<Vec<FeatureMap<T>>> {
        let (h, w) = (patch.size.h, patch.size.w);
        let plane = h * w;
        let mut chw = vec![0f32; 3 * plane];
        for (i, px) in patch.pixels.chunks_exact(3).enumerate() {
            for c in 0..3 {
                chw[c * plane + i] = px[c] as f32 / 255.0;
            }
        }
        let fail = |e: TractError| Error::BackendFailure(format!("{e:#}"));
        let input = Tensor::from_shape(&[1, 3, h, w], &chw).map_err(fail)?;
        let outs = self.plan(patch.size)?.run(tvec!(input.into())).map_err(fail)?;
        if outs.len() != NUM_LAYERS {
            return Err(Error::WrongOutputArity { got: outs.len() });
        }
        outs.iter()
            .map(|t| {
                let shape = t.shape();
                if shape.len() != 4 {
                    return Err(Error::BackendFailure(format!("output shaped {shape:?}")));
                }
                let t = t.cast_to::<f32>().map_err(fail)?;
                let view = t.to_plain_array_view::<f32>().map_err(fail)?;
                Ok(FeatureMap {
                    channels: shape[1],
                    height: shape[2],
                    width: shape[3],
                    data: view.iter().map(|&v| T::lit(v as f64)).collect(),
                })
            })
            .collect()
    }
}
