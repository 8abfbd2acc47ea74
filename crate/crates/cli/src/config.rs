//! Settings merged from flags, `TRYON_EVAL_*` variables, a TOML or JSON
//! config file, and built-in defaults, in that order of precedence.
//!
//! clap already folds environment variables into the flag values, so the
//! merge here only has to layer the flag view over the file view.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tryon_eval::annotations::SchemaOverrides;
use tryon_eval::harness::{EvalConfig, MetricSel, ReportFormat, UnusedReference};
use tryon_eval::mask_maker::MaskParams;
use tryon_eval::perceptual::{BackendKind, PatchSize};
use tryon_eval::{Error, Result};

/// One layer of settings. Every field is optional so layers can be stacked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Layer {
    pub dataset_root: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub metric: Option<MetricSel>,
    pub backend: Option<BackendKind>,
    pub model: Option<PathBuf>,
    pub linear_weights: Option<PathBuf>,
    pub patch_size: Option<usize>,
    pub tau_b: Option<u8>,
    pub tau_t: Option<f64>,
    pub prob_adaptive: Option<f64>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<ReportFormat>,
    pub unused_reference: Option<UnusedReference>,
    pub fractions: Option<Vec<f64>>,
    /// Label-id overrides for the parsing and densepose maps.
    pub schema: Option<SchemaOverrides>,
}

macro_rules! layer_fields {
    ($hi:ident, $lo:ident, $($f:ident),*) => {
        Layer { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl Layer {
    /// Reads a config file; `.json` files are JSON, anything else TOML.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::MalformedFile { path: path.into(), reason: e.to_string() })?;
        let bad = |reason: String| Error::MalformedFile { path: path.into(), reason };
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| bad(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| bad(e.to_string()))
        }
    }

    /// `self` wins wherever it has a value.
    pub fn over(self, lower: Layer) -> Layer {
        layer_fields!(
            self,
            lower,
            dataset_root,
            manifest,
            out,
            metric,
            backend,
            model,
            linear_weights,
            patch_size,
            tau_b,
            tau_t,
            prob_adaptive,
            workers,
            seed,
            format,
            unused_reference,
            fractions,
            schema
        )
    }
}

/// Fully resolved view used by the commands.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings(pub Layer);

impl Settings {
    pub fn resolve(flags: Layer, config: Option<&Path>) -> Result<Self> {
        let file = config.map(Layer::from_path).transpose()?.unwrap_or_default();
        Ok(Settings(flags.over(file)))
    }

    pub fn seed(&self) -> u64 {
        self.0.seed.unwrap_or(0)
    }

    pub fn workers(&self) -> usize {
        self.0.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn require<'a, T>(&self, value: &'a Option<T>, flag: &str) -> Result<&'a T> {
        value.as_ref().ok_or_else(|| Error::InvalidParams(format!("{flag} is required (flag, environment or config file)")))
    }

    pub fn mask_params(&self) -> Result<MaskParams> {
        let d = MaskParams::default();
        let p = MaskParams {
            tau_b: self.0.tau_b.unwrap_or(d.tau_b),
            tau_t: self.0.tau_t.unwrap_or(d.tau_t),
            p: self.0.prob_adaptive.unwrap_or(d.p),
            ..d
        };
        p.validate()?;
        Ok(p)
    }

    pub fn eval_config(&self) -> Result<EvalConfig> {
        let d = EvalConfig::default();
        let patch = self.0.patch_size.map_or(d.patch, PatchSize::square);
        patch.validate()?;
        let annotations = match &self.0.schema {
            Some(o) => o.resolve()?,
            None => d.annotations,
        };
        Ok(EvalConfig {
            metric: self.0.metric.unwrap_or(d.metric),
            backend: self.0.backend.unwrap_or(d.backend),
            model: self.0.model.clone(),
            linear_weights: self.0.linear_weights.clone(),
            patch,
            mask: self.mask_params()?,
            unused_reference: self.0.unused_reference.unwrap_or_default(),
            seed: self.seed(),
            annotations,
        })
    }

    /// Explicit format, else the output file's extension, else JSON.
    pub fn format_for(&self, path: &Path) -> ReportFormat {
        self.0.format.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        })
    }
}
