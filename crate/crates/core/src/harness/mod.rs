//! Batch evaluation over try-on manifests.
//!
//! Each pair compares the clothing source's real photo (the person actually
//! wearing the garment) against the generated try-on of that garment on the
//! model. Pairs are evaluated in parallel; records come back in manifest
//! order and aggregates are summed sequentially so reports do not depend on
//! the worker count.

mod layout;
mod manifest;
mod mix;
mod report;

use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use layout::DatasetLayout;
pub use manifest::{gen_cross_manifest, read_ids, Manifest, Pair};
pub use mix::{mix_experiment, MixRow, MixSample, MixSpec};
pub use report::{read_report, write_report, ReportFormat};

use crate::annotations::{load_bundle, AnnotationBundle, AnnotationConfig};
use crate::error::{Error, Result};
use crate::mask_maker::{determine_style, MaskParams, WearingStyle};
use crate::perceptual::{BackendKind, FeatureBackend, LinearWeights, PatchSize, Slpips, SlpipsScore, NUM_LAYERS};
use crate::sdr::{sdr_inputs_from_maps, sdr_pair_report, SdrPairReport};
use crate::skeleton::{build_grid, SkeletonGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricSel {
    Sdr,
    Slpips,
    #[default]
    Both,
}

impl MetricSel {
    pub fn sdr(self) -> bool {
        matches!(self, MetricSel::Sdr | MetricSel::Both)
    }

    pub fn slpips(self) -> bool {
        matches!(self, MetricSel::Slpips | MetricSel::Both)
    }
}

impl FromStr for MetricSel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sdr" => Ok(MetricSel::Sdr),
            "slpips" => Ok(MetricSel::Slpips),
            "both" => Ok(MetricSel::Both),
            other => Err(Error::InvalidParams(format!("unknown metric `{other}`"))),
        }
    }
}

/// Whose parsing map decides which grid nodes lie on the garment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnusedReference {
    /// The real photo's map, for both grids.
    #[default]
    Real,
    /// Each grid its own image's map.
    Own,
}

/// Everything that affects a report's numbers. Echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub metric: MetricSel,
    pub backend: BackendKind,
    pub model: Option<PathBuf>,
    pub linear_weights: Option<PathBuf>,
    pub patch: PatchSize,
    pub mask: MaskParams,
    pub unused_reference: UnusedReference,
    pub seed: u64,
    pub annotations: AnnotationConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            metric: MetricSel::Both,
            backend: BackendKind::DeterministicTest,
            model: None,
            linear_weights: None,
            patch: PatchSize::default(),
            mask: MaskParams::default(),
            unused_reference: UnusedReference::Real,
            seed: 0,
            annotations: AnnotationConfig::default(),
        }
    }
}

/// Result of one metric on one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum Outcome<T> {
    Ok(T),
    Skipped { kind: String, detail: String },
}

impl<T> Outcome<T> {
    fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => Outcome::Skipped { kind: e.kind().into(), detail: e.to_string() },
        }
    }

    pub fn ok(&self) -> Option<&T> {
        match self {
            Outcome::Ok(v) => Some(v),
            Outcome::Skipped { .. } => None,
        }
    }

    pub fn skip_kind(&self) -> Option<&str> {
        match self {
            Outcome::Ok(_) => None,
            Outcome::Skipped { kind, .. } => Some(kind),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum RecordStatus {
    Ok,
    /// The pair could not be evaluated at all; no metric values are kept.
    Skipped { kind: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub model_id: String,
    pub clothing_id: String,
    pub status: RecordStatus,
    pub style_real: Option<WearingStyle>,
    pub style_virt: Option<WearingStyle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdr: Option<Outcome<SdrPairReport>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slpips: Option<Outcome<SlpipsScore<f64>>>,
}

impl EvalRecord {
    pub fn skipped(pair: &Pair, err: &Error) -> Self {
        Self {
            model_id: pair.model_id.clone(),
            clothing_id: pair.clothing_id.clone(),
            status: RecordStatus::Skipped { kind: err.kind().into(), detail: err.to_string() },
            style_real: None,
            style_virt: None,
            sdr: None,
            slpips: None,
        }
    }

    pub fn pair(&self) -> Pair {
        Pair::new(&self.model_id, &self.clothing_id)
    }

    pub fn sdr_distance(&self) -> Option<f64> {
        self.sdr.as_ref().and_then(Outcome::ok).map(|r| r.distance)
    }

    pub fn slpips_value(&self) -> Option<f64> {
        self.slpips.as_ref().and_then(Outcome::ok).map(|s| s.value)
    }

    /// At least one requested metric produced a value.
    pub fn is_ok(&self) -> bool {
        self.status == RecordStatus::Ok && (self.sdr_distance().is_some() || self.slpips_value().is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub mean: f64,
    pub count: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SlpipsAggregate {
    pub mean: f64,
    pub per_layer: [f64; NUM_LAYERS],
    pub count: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregates {
    pub records: usize,
    pub skipped_records: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdr: Option<MetricAggregate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slpips: Option<SlpipsAggregate>,
}

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl Aggregates {
    /// Means over the Ok outcomes of each metric, in record order.
    pub fn compute(records: &[EvalRecord], metric: MetricSel) -> Self {
        let skipped_records = records.iter().filter(|r| r.status != RecordStatus::Ok).count();
        let live = records.iter().filter(|r| r.status == RecordStatus::Ok);
        let sdr = metric.sdr().then(|| {
            let (mut sum, mut count, mut skipped) = (0.0, 0, 0);
            for r in live.clone() {
                match r.sdr.as_ref().and_then(Outcome::ok) {
                    Some(v) => {
                        sum += v.distance;
                        count += 1;
                    }
                    None => skipped += 1,
                }
            }
            MetricAggregate { mean: mean(sum, count), count, skipped }
        });
        let slpips = metric.slpips().then(|| {
            let (mut sum, mut layers, mut count, mut skipped) = (0.0, [0.0; NUM_LAYERS], 0, 0);
            for r in live.clone() {
                match r.slpips.as_ref().and_then(Outcome::ok) {
                    Some(s) => {
                        sum += s.value;
                        for (acc, v) in layers.iter_mut().zip(s.per_layer) {
                            *acc += v;
                        }
                        count += 1;
                    }
                    None => skipped += 1,
                }
            }
            SlpipsAggregate { mean: mean(sum, count), per_layer: layers.map(|s| mean(s, count)), count, skipped }
        });
        Self { records: records.len(), skipped_records, sdr, slpips }
    }

    /// Compares against a recomputation, allowing `tol` on every mean.
    pub fn matches(&self, other: &Self, tol: f64) -> bool {
        let close = |a: f64, b: f64| a.is_finite() && b.is_finite() && (a - b).abs() <= tol;
        let sdr_ok = match (&self.sdr, &other.sdr) {
            (None, None) => true,
            (Some(a), Some(b)) => a.count == b.count && a.skipped == b.skipped && close(a.mean, b.mean),
            _ => false,
        };
        let sl_ok = match (&self.slpips, &other.slpips) {
            (None, None) => true,
            (Some(a), Some(b)) => {
                a.count == b.count
                    && a.skipped == b.skipped
                    && close(a.mean, b.mean)
                    && a.per_layer.iter().zip(&b.per_layer).all(|(x, y)| close(*x, *y))
            }
            _ => false,
        };
        self.records == other.records && self.skipped_records == other.skipped_records && sdr_ok && sl_ok
    }
}

/// Configuration echo stored with a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub backend_id: String,
    pub config: EvalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ConfigEcho,
    pub aggregates: Aggregates,
    pub records: Vec<EvalRecord>,
}

impl Report {
    pub fn new(config: ConfigEcho, records: Vec<EvalRecord>) -> Self {
        let aggregates = Aggregates::compute(&records, config.config.metric);
        Self { config, aggregates, records }
    }

    pub fn ok_count(&self) -> usize {
        self.records.iter().filter(|r| r.is_ok()).count()
    }
}

/// Evaluates pairs with one configuration and one backend.
pub struct Evaluator<'a> {
    pub config: &'a EvalConfig,
    pub backend: &'a dyn FeatureBackend<f64>,
    pub weights: Option<&'a LinearWeights>,
}

impl<'a> Evaluator<'a> {
    pub fn new(config: &'a EvalConfig, backend: &'a dyn FeatureBackend<f64>) -> Self {
        Self { config, backend, weights: None }
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho { backend_id: self.backend.info().id.clone(), config: self.config.clone() }
    }

    /// Filtered grids of both images, as scored by S-LPIPS.
    pub fn grids(&self, real: &AnnotationBundle, virt: &AnnotationBundle) -> Result<(SkeletonGrid<f64>, SkeletonGrid<f64>)> {
        let gr = build_grid::<f64>(&real.keypoints)?.filter_missed(&real.densepose)?;
        let gv = build_grid::<f64>(&virt.keypoints)?.filter_missed(&virt.densepose)?;
        let parse_v = match self.config.unused_reference {
            UnusedReference::Real => &real.parse,
            UnusedReference::Own => &virt.parse,
        };
        Ok((gr.filter_unused(&real.parse)?, gv.filter_unused(parse_v)?))
    }

    fn slpips(&self, real: &AnnotationBundle, virt: &AnnotationBundle) -> Result<SlpipsScore<f64>> {
        let (gr, gv) = self.grids(real, virt)?;
        let mut s = Slpips::new(self.backend, self.config.patch);
        if let Some(w) = self.weights {
            s = s.with_weights(w)?;
        }
        s.score(&real.image, &virt.image, &gr, &gv)
    }

    pub fn evaluate_pair(&self, real: &AnnotationBundle, virt: &AnnotationBundle) -> EvalRecord {
        let pair = Pair::new(&virt.sample_id, &real.sample_id);
        self.evaluate_ids(&pair, real, virt)
    }

    fn evaluate_ids(&self, pair: &Pair, real: &AnnotationBundle, virt: &AnnotationBundle) -> EvalRecord {
        let consistent = real
            .ensure_consistent()
            .and_then(|_| virt.ensure_consistent())
            .and_then(|_| match real.dims() == virt.dims() {
                true => Ok(()),
                false => Err(Error::dims(format!("generated image {}", virt.sample_id), real.dims(), virt.dims())),
            });
        if let Err(e) = consistent {
            return EvalRecord::skipped(pair, &e);
        }
        let metric = self.config.metric;
        let sdr = metric.sdr().then(|| {
            Outcome::from_result(
                sdr_inputs_from_maps(&real.parse, &real.densepose)
                    .and_then(|r| Ok((r, sdr_inputs_from_maps(&virt.parse, &virt.densepose)?)))
                    .and_then(|(r, v)| sdr_pair_report(&r, &v)),
            )
        });
        let slpips = metric.slpips().then(|| Outcome::from_result(self.slpips(real, virt)));
        EvalRecord {
            model_id: pair.model_id.clone(),
            clothing_id: pair.clothing_id.clone(),
            status: RecordStatus::Ok,
            style_real: determine_style(real, &self.config.mask).ok().map(|d| d.style),
            style_virt: determine_style(virt, &self.config.mask).ok().map(|d| d.style),
            sdr,
            slpips,
        }
    }

    /// Evaluates every manifest entry on `workers` threads.
    pub fn evaluate_manifest(&self, manifest: &Manifest, layout: &DatasetLayout, workers: usize) -> Result<Report> {
        if workers == 0 {
            return Err(Error::InvalidParams("workers must be at least 1".into()));
        }
        layout.resolve(manifest)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
        let annotations = &self.config.annotations;
        let records = pool.install(|| {
            let mut ids: Vec<&str> = manifest.entries.iter().map(|p| p.clothing_id.as_str()).collect();
            ids.sort_unstable();
            ids.dedup();
            let reals: HashMap<&str, std::result::Result<Arc<AnnotationBundle>, Arc<Error>>> = ids
                .par_iter()
                .map(|&id| {
                    let b = load_bundle(id, &layout.real_paths(id), annotations).map(Arc::new).map_err(Arc::new);
                    (id, b)
                })
                .collect();
            manifest
                .entries
                .par_iter()
                .map(|pair| {
                    let real = match &reals[pair.clothing_id.as_str()] {
                        Ok(b) => b,
                        Err(e) => return EvalRecord::skipped(pair, e),
                    };
                    let stem = DatasetLayout::generated_stem(pair);
                    match load_bundle(&stem, &layout.generated_paths(pair), annotations) {
                        Ok(virt) => self.evaluate_ids(pair, real, &virt),
                        Err(e) => EvalRecord::skipped(pair, &e),
                    }
                })
                .collect::<Vec<_>>()
        });
        Ok(Report::new(self.echo(), records))
    }
}

/// Evaluates one pair with unit channel weights.
pub fn evaluate_pair(
    real: &AnnotationBundle,
    virt: &AnnotationBundle,
    config: &EvalConfig,
    backend: &dyn FeatureBackend<f64>,
) -> EvalRecord {
    Evaluator::new(config, backend).evaluate_pair(real, virt)
}

pub fn evaluate_manifest(
    manifest: &Manifest,
    layout: &DatasetLayout,
    config: &EvalConfig,
    backend: &dyn FeatureBackend<f64>,
    workers: usize,
) -> Result<Report> {
    Evaluator::new(config, backend).evaluate_manifest(manifest, layout, workers)
}
