//! `tryon-eval`: masks, SDR distance and S-LPIPS for unpaired try-on results.
//!
//! Exit status is 0 on success, 2 when the input is at fault (missing or
//! malformed files, bad parameters) and 1 on internal failures.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;
use tryon_eval::annotations::{load_bundle, AnnotationBundle};
use tryon_eval::harness::{
    gen_cross_manifest, mix_experiment, read_ids, read_report, write_report, DatasetLayout, EvalConfig, Evaluator,
    Manifest, MetricSel, MixSample, MixSpec, Pair, RecordStatus, Report, ReportFormat, UnusedReference,
};
use tryon_eval::mask_maker::{calibrate_tau_t, choose_training_mask_with_style, determine_style};
use tryon_eval::perceptual::{load_backend, BackendKind, LinearWeights};
use tryon_eval::Error;

use config::{Layer, Settings};

#[derive(Parser)]
#[command(name = "tryon-eval", version, about = "Evaluate unpaired virtual try-on results")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a sample's wearing style and write its training mask
    Mask(MaskArgs),
    /// SDR distance of one generated try-on against the real photo
    Sdr(SdrArgs),
    /// S-LPIPS of one generated try-on against the real photo
    Slpips(SlpipsArgs),
    /// Evaluate every pair of a manifest and write a report
    Eval(EvalArgs),
    /// Write the full cross-try-on manifest for a list of ids
    Manifest(ManifestArgs),
    /// Mix incorrect results into correct ones at several fractions
    Mix(MixArgs),
    /// Estimate tau_t as the mean torso aspect ratio of a dataset
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct Common {
    /// TOML or JSON file with default settings
    #[arg(long, env = "TRYON_EVAL_CONFIG", hide_env_values = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice
    #[arg(long, env = "TRYON_EVAL_SEED", hide_env_values = true)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Dataset {
    /// Dataset root holding image/, parse/, densepose/, openpose/ and generated/
    #[arg(long, env = "TRYON_EVAL_DATASET_ROOT", hide_env_values = true)]
    dataset_root: Option<PathBuf>,
}

#[derive(Args)]
struct Style {
    /// Checkpoint count above which the top covers the bottom [default: 3]
    #[arg(long, env = "TRYON_EVAL_TAU_B", hide_env_values = true)]
    tau_b: Option<u8>,
    /// Torso aspect ratio at or above which a top counts as short [default: 0.65]
    #[arg(long, env = "TRYON_EVAL_TAU_T", hide_env_values = true)]
    tau_t: Option<f64>,
}

#[derive(Args)]
struct Metric {
    /// Feature network [default: deterministic-test]
    #[arg(long, env = "TRYON_EVAL_BACKEND", hide_env_values = true,
          value_parser = PossibleValuesParser::new(["reference-vgg", "deterministic-test"])
              .map(|s| s.parse::<BackendKind>().expect("listed value")))]
    backend: Option<BackendKind>,
    /// ONNX file for the reference-vgg backend
    #[arg(long, env = "TRYON_EVAL_MODEL", hide_env_values = true)]
    model: Option<PathBuf>,
    /// JSON file with per-channel weights for each of the five layers
    #[arg(long, env = "TRYON_EVAL_LINEAR_WEIGHTS", hide_env_values = true)]
    linear_weights: Option<PathBuf>,
    /// Side of the square patch cut around each node [default: 64]
    #[arg(long, env = "TRYON_EVAL_PATCH_SIZE", hide_env_values = true)]
    patch_size: Option<usize>,
    /// Parsing map that decides which nodes lie on the garment [default: real]
    #[arg(long, env = "TRYON_EVAL_UNUSED_REFERENCE", hide_env_values = true,
          value_parser = PossibleValuesParser::new(["real", "own"]).map(|s| match s.as_str() {
              "own" => UnusedReference::Own,
              _ => UnusedReference::Real,
          }))]
    unused_reference: Option<UnusedReference>,
}

#[derive(Args)]
struct PairIds {
    /// Person the garment was put on
    #[arg(long)]
    model_id: String,
    /// Sample whose garment was tried on
    #[arg(long)]
    clothing_id: String,
}

#[derive(Args)]
struct MaskArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    dataset: Dataset,
    #[command(flatten)]
    style: Style,
    /// Sample id under the dataset root
    #[arg(long)]
    id: String,
    /// Probability of the adaptive mask for non-interfered samples [default: 0.5]
    #[arg(long, env = "TRYON_EVAL_PROB_ADAPTIVE", hide_env_values = true)]
    prob_adaptive: Option<f64>,
    /// Output directory [default: .]
    #[arg(long, env = "TRYON_EVAL_OUT", hide_env_values = true)]
    out: Option<PathBuf>,
    /// Print the wearing style and write nothing
    #[arg(long)]
    style_only: bool,
    /// Colour painted over the masked region, as R,G,B
    #[arg(long, default_value = "128,128,128", value_parser = parse_rgb)]
    fill: [u8; 3],
}

#[derive(Args)]
struct SdrArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    dataset: Dataset,
    #[command(flatten)]
    pair: PairIds,
    /// Also write the record as JSON to this file
    #[arg(long, env = "TRYON_EVAL_OUT", hide_env_values = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SlpipsArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    dataset: Dataset,
    #[command(flatten)]
    pair: PairIds,
    #[command(flatten)]
    metric: Metric,
    /// Also write the record as JSON to this file
    #[arg(long, env = "TRYON_EVAL_OUT", hide_env_values = true)]
    out: Option<PathBuf>,
    /// Directory for grid overlays and node lists of both images
    #[arg(long)]
    dump_grid: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    dataset: Dataset,
    #[command(flatten)]
    style: Style,
    #[command(flatten)]
    metric_args: Metric,
    /// CSV with model_id,clothing_id rows
    #[arg(long, env = "TRYON_EVAL_MANIFEST", hide_env_values = true)]
    manifest: Option<PathBuf>,
    /// Report file
    #[arg(long, env = "TRYON_EVAL_OUT", hide_env_values = true)]
    out: Option<PathBuf>,
    /// Metrics to compute [default: both]
    #[arg(long, env = "TRYON_EVAL_METRIC", hide_env_values = true,
          value_parser = PossibleValuesParser::new(["sdr", "slpips", "both"])
              .map(|s| s.parse::<MetricSel>().expect("listed value")))]
    metric: Option<MetricSel>,
    /// Worker threads [default: available cores]
    #[arg(long, env = "TRYON_EVAL_WORKERS", hide_env_values = true)]
    workers: Option<usize>,
    /// Report format [default: from the --out extension]
    #[arg(long, env = "TRYON_EVAL_FORMAT", hide_env_values = true, value_parser = format_parser())]
    format: Option<ReportFormat>,
}

#[derive(Args)]
struct ManifestArgs {
    #[command(flatten)]
    common: Common,
    /// Text file with one sample id per line
    #[arg(long)]
    ids: PathBuf,
    /// Manifest CSV [default: standard output]
    #[arg(long, env = "TRYON_EVAL_OUT", hide_env_values = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MixArgs {
    #[command(flatten)]
    common: Common,
    /// Report of the correct try-on results
    #[arg(long)]
    correct: PathBuf,
    /// Report of the incorrect stand-ins
    #[arg(long)]
    incorrect: PathBuf,
    /// Comma-separated substitution fractions [default: 0,0.2,0.4,0.6,0.8,1]
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
    /// Format of both input reports [default: from each file's extension]
    #[arg(long, env = "TRYON_EVAL_FORMAT", hide_env_values = true, value_parser = format_parser())]
    format: Option<ReportFormat>,
    /// Also write the table as CSV to this file
    #[arg(long, env = "TRYON_EVAL_OUT", hide_env_values = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    dataset: Dataset,
    /// Text file with the sample ids to use [default: every image under the root]
    #[arg(long)]
    ids: Option<PathBuf>,
}

fn format_parser() -> impl TypedValueParser<Value = ReportFormat> {
    PossibleValuesParser::new(["json", "csv"]).map(|s| s.parse::<ReportFormat>().expect("listed value"))
}

fn parse_rgb(s: &str) -> Result<[u8; 3], String> {
    let parts: Vec<u8> = s.split(',').map(|p| p.trim().parse::<u8>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    parts.try_into().map_err(|_| "expected three comma-separated values, like 128,128,128".to_string())
}

/// Why a command failed, and which exit status that maps to.
#[derive(Debug)]
enum Failure {
    Input(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Input(format!("cannot write {}: {e}", path.display()))
}

type Outcome = Result<ExitCode, Failure>;

impl Common {
    fn layer(&self) -> Layer {
        Layer { seed: self.seed, ..Layer::default() }
    }

    fn settings(&self, flags: Layer) -> Result<Settings, Failure> {
        Ok(Settings::resolve(flags.over(self.layer()), self.config.as_deref())?)
    }
}

impl Style {
    fn layer(&self) -> Layer {
        Layer { tau_b: self.tau_b, tau_t: self.tau_t, ..Layer::default() }
    }
}

impl Metric {
    fn layer(&self) -> Layer {
        Layer {
            backend: self.backend,
            model: self.model.clone(),
            linear_weights: self.linear_weights.clone(),
            patch_size: self.patch_size,
            unused_reference: self.unused_reference,
            ..Layer::default()
        }
    }
}

fn layout(settings: &Settings) -> Result<DatasetLayout, Failure> {
    let root = settings.require(&settings.0.dataset_root, "--dataset-root")?;
    if !root.is_dir() {
        return Err(Error::DatasetResolutionFailure { missing: vec![root.clone()] }.into());
    }
    Ok(DatasetLayout::new(root))
}

fn load_pair(layout: &DatasetLayout, ids: &PairIds, cfg: &EvalConfig) -> Result<(AnnotationBundle, AnnotationBundle), Failure> {
    let pair = Pair::new(&ids.model_id, &ids.clothing_id);
    let real = load_bundle(&pair.clothing_id, &layout.real_paths(&pair.clothing_id), &cfg.annotations)?;
    let virt = load_bundle(&pair.model_id, &layout.generated_paths(&pair), &cfg.annotations)?;
    Ok((real, virt))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| io_failure(path, e))
}

fn load_weights(cfg: &EvalConfig) -> Result<Option<LinearWeights>, Failure> {
    Ok(cfg.linear_weights.as_deref().map(LinearWeights::from_path).transpose()?)
}

fn cmd_mask(a: &MaskArgs) -> Outcome {
    let flags = Layer { dataset_root: a.dataset.dataset_root.clone(), prob_adaptive: a.prob_adaptive, out: a.out.clone(), ..a.style.layer() };
    let settings = a.common.settings(flags)?;
    let params = settings.mask_params()?;
    let annotations = settings.eval_config()?.annotations;
    let layout = layout(&settings)?;
    let bundle = load_bundle(&a.id, &layout.real_paths(&a.id), &annotations)?;
    let decision = determine_style(&bundle, &params)?;
    if a.style_only {
        println!("{}", decision.style);
        return Ok(ExitCode::SUCCESS);
    }
    let seed = settings.seed();
    let tm = choose_training_mask_with_style(&bundle, decision.style, &params, a.fill, seed)?;
    let out = settings.0.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).map_err(|e| io_failure(&out, e))?;
    let mask_path = out.join(format!("{}_mask.png", a.id));
    std::fs::write(&mask_path, tm.mask.to_png_bytes()).map_err(|e| io_failure(&mask_path, e))?;
    tm.agnostic.0.save_png(&out.join(format!("{}_agnostic.png", a.id)))?;

    #[derive(Serialize)]
    struct Meta<'a> {
        id: &'a str,
        style: tryon_eval::mask_maker::WearingStyle,
        checkpoints_in_top: u8,
        torso_ratio: Option<f64>,
        used_adaptive: bool,
        adaptive: Option<&'a tryon_eval::mask_maker::AdaptiveMeta>,
        mask_area: u64,
        seed: u64,
        params: &'a tryon_eval::mask_maker::MaskParams,
    }
    let meta = Meta {
        id: &a.id,
        style: decision.style,
        checkpoints_in_top: decision.checkpoints_in_top,
        torso_ratio: decision.torso_ratio.map(|r| r.0),
        used_adaptive: tm.used_adaptive,
        adaptive: tm.meta.as_ref(),
        mask_area: tm.mask.area(),
        seed,
        params: &params,
    };
    write_json(&out.join(format!("{}_meta.json", a.id)), &meta)?;
    let ratio = decision.torso_ratio.map_or("undefined".to_string(), |r| format!("{:.4}", r.0));
    println!(
        "{}: {} ({}/5 checkpoints on the top, torso ratio {ratio}), {} mask",
        a.id,
        decision.style,
        decision.checkpoints_in_top,
        if tm.used_adaptive || tm.meta.is_some() { "adaptive" } else { "baseline" }
    );
    Ok(ExitCode::SUCCESS)
}

/// Prints a skipped record as an input failure.
fn record_failure(status: &RecordStatus) -> Option<Failure> {
    match status {
        RecordStatus::Ok => None,
        RecordStatus::Skipped { detail, .. } => Some(Failure::Input(detail.clone())),
    }
}

fn cmd_sdr(a: &SdrArgs) -> Outcome {
    let flags = Layer { dataset_root: a.dataset.dataset_root.clone(), out: a.out.clone(), ..Layer::default() };
    let settings = a.common.settings(flags)?;
    let cfg = EvalConfig { metric: MetricSel::Sdr, ..settings.eval_config()? };
    let (real, virt) = load_pair(&layout(&settings)?, &a.pair, &cfg)?;
    let backend = tryon_eval::perceptual::GradientPyramid;
    let rec = Evaluator::new(&cfg, &backend).evaluate_pair(&real, &virt);
    if let Some(f) = record_failure(&rec.status) {
        return Err(f);
    }
    if let Some(out) = &settings.0.out {
        write_json(out, &rec)?;
    }
    match rec.sdr.as_ref().expect("sdr requested") {
        tryon_eval::harness::Outcome::Ok(r) => {
            println!("sdr distance {:.6} (real {:.6}, generated {:.6})", r.distance, r.sdr_r, r.sdr_v);
            Ok(ExitCode::SUCCESS)
        }
        tryon_eval::harness::Outcome::Skipped { detail, .. } => Err(Failure::Input(detail.clone())),
    }
}

fn cmd_slpips(a: &SlpipsArgs) -> Outcome {
    let flags = Layer { dataset_root: a.dataset.dataset_root.clone(), out: a.out.clone(), ..a.metric.layer() };
    let settings = a.common.settings(flags)?;
    let cfg = EvalConfig { metric: MetricSel::Slpips, ..settings.eval_config()? };
    let (real, virt) = load_pair(&layout(&settings)?, &a.pair, &cfg)?;
    let backend = load_backend::<f64>(cfg.backend, cfg.model.as_deref())?;
    let weights = load_weights(&cfg)?;
    let eval = Evaluator { config: &cfg, backend: backend.as_ref(), weights: weights.as_ref() };
    if let Some(dir) = &a.dump_grid {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        let (gr, gv) = eval.grids(&real, &virt)?;
        let stem = format!("{}__{}", a.pair.model_id, a.pair.clothing_id);
        gr.overlay(&real.image).save_png(&dir.join(format!("{stem}_real_grid.png")))?;
        gv.overlay(&virt.image).save_png(&dir.join(format!("{stem}_virt_grid.png")))?;
        write_json(&dir.join(format!("{stem}_grids.json")), &serde_json::json!({ "real": gr, "virt": gv }))?;
    }
    let rec = eval.evaluate_pair(&real, &virt);
    if let Some(f) = record_failure(&rec.status) {
        return Err(f);
    }
    if let Some(out) = &settings.0.out {
        write_json(out, &rec)?;
    }
    match rec.slpips.as_ref().expect("slpips requested") {
        tryon_eval::harness::Outcome::Ok(s) => {
            let layers: Vec<String> = s.per_layer.iter().map(|v| format!("{v:.6}")).collect();
            println!("s-lpips {:.6} over {} nodes (layers {})", s.value, s.n_nodes, layers.join(", "));
            Ok(ExitCode::SUCCESS)
        }
        tryon_eval::harness::Outcome::Skipped { detail, .. } => Err(Failure::Input(detail.clone())),
    }
}

fn summarize(report: &Report) {
    let a = &report.aggregates;
    println!("records {} ({} ok, {} skipped)", a.records, report.ok_count(), a.skipped_records);
    if let Some(s) = &a.sdr {
        println!("sdr distance mean {:.6} over {} pairs ({} skipped)", s.mean, s.count, s.skipped);
    }
    if let Some(s) = &a.slpips {
        println!("s-lpips mean {:.6} over {} pairs ({} skipped)", s.mean, s.count, s.skipped);
    }
}

fn cmd_eval(a: &EvalArgs) -> Outcome {
    let flags = Layer {
        dataset_root: a.dataset.dataset_root.clone(),
        manifest: a.manifest.clone(),
        out: a.out.clone(),
        metric: a.metric,
        workers: a.workers,
        format: a.format,
        ..a.metric_args.layer().over(a.style.layer())
    };
    let settings = a.common.settings(flags)?;
    let cfg = settings.eval_config()?;
    let layout = layout(&settings)?;
    let manifest = Manifest::read_csv(settings.require(&settings.0.manifest, "--manifest")?)?;
    let out = settings.require(&settings.0.out, "--out")?;
    let backend = load_backend::<f64>(cfg.backend, cfg.model.as_deref())?;
    let weights = load_weights(&cfg)?;
    let eval = Evaluator { config: &cfg, backend: backend.as_ref(), weights: weights.as_ref() };
    let workers = settings.workers();
    info!("evaluating {} pairs on {workers} workers with {}", manifest.len(), backend.info().id);
    let report = eval.evaluate_manifest(&manifest, &layout, workers)?;
    write_report(&report, out, settings.format_for(out))?;
    for r in report.records.iter().filter(|r| !r.is_ok()) {
        if let RecordStatus::Skipped { kind, detail } = &r.status {
            eprintln!("skipped {}/{}: {kind}: {detail}", r.model_id, r.clothing_id);
        }
    }
    summarize(&report);
    if !report.records.is_empty() && report.ok_count() == 0 {
        return Err(Failure::Input("no pair could be evaluated".into()));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_manifest(a: &ManifestArgs) -> Outcome {
    let settings = a.common.settings(Layer { out: a.out.clone(), ..Layer::default() })?;
    let manifest = gen_cross_manifest(&read_ids(&a.ids)?)?;
    match &settings.0.out {
        Some(out) => {
            manifest.write_csv(out)?;
            println!("{} pairs written to {}", manifest.len(), out.display());
        }
        None => manifest.write_csv_to(std::io::stdout().lock(), Path::new("<stdout>"))?,
    }
    Ok(ExitCode::SUCCESS)
}

fn report_format(explicit: Option<ReportFormat>, path: &Path) -> ReportFormat {
    Settings(Layer { format: explicit, ..Layer::default() }).format_for(path)
}

fn cmd_mix(a: &MixArgs) -> Outcome {
    let settings = a.common.settings(Layer { fractions: a.fractions.clone(), out: a.out.clone(), format: a.format, ..Layer::default() })?;
    let spec = MixSpec { fractions: settings.0.fractions.clone().unwrap_or_else(|| MixSpec::default().fractions), seed: settings.seed() };
    let pool = |path: &Path| -> Result<Vec<MixSample>, Failure> {
        let report = read_report(path, report_format(settings.0.format, path))?;
        Ok(report.records.iter().filter(|r| r.is_ok()).map(MixSample::from_record).collect())
    };
    let rows = mix_experiment(&spec, &pool(&a.correct)?, &pool(&a.incorrect)?)?;
    let cell = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.6}"));
    let mut table = String::from("fraction,substituted,mean_sdr,mean_slpips\n");
    for r in &rows {
        table.push_str(&format!("{},{},{},{}\n", r.fraction, r.substituted, cell(r.mean_sdr), cell(r.mean_slpips)));
    }
    print!("{table}");
    if let Some(out) = &settings.0.out {
        std::fs::write(out, &table).map_err(|e| io_failure(out, e))?;
    }
    Ok(ExitCode::SUCCESS)
}

/// Stems of the images directly under `{root}/image`, sorted.
fn scan_ids(root: &Path) -> Result<Vec<String>, Failure> {
    let dir = root.join("image");
    let entries = std::fs::read_dir(&dir).map_err(|e| Failure::Input(format!("cannot list {}: {e}", dir.display())))?;
    let mut ids: Vec<String> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().and_then(|e| e.to_str()).is_some_and(|e| ["png", "jpg", "jpeg"].contains(&e.to_ascii_lowercase().as_str()))
        })
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    ids.sort();
    ids.dedup();
    Ok(ids)
}

fn cmd_calibrate(a: &CalibrateArgs) -> Outcome {
    let settings = a.common.settings(Layer { dataset_root: a.dataset.dataset_root.clone(), ..Layer::default() })?;
    let annotations = settings.eval_config()?.annotations;
    let layout = layout(&settings)?;
    let ids = match &a.ids {
        Some(path) => read_ids(path)?,
        None => scan_ids(&layout.root)?,
    };
    let bundles = ids
        .iter()
        .map(|id| load_bundle(id, &layout.real_paths(id), &annotations))
        .collect::<Result<Vec<_>, _>>()?;
    let c = calibrate_tau_t(&bundles)?;
    println!("tau_t {:.4} (mean over {} samples, {} without a torso ratio)", c.tau_t, c.used, c.skipped);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("TRYON_EVAL_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Mask(a) => cmd_mask(a),
        Command::Sdr(a) => cmd_sdr(a),
        Command::Slpips(a) => cmd_slpips(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Manifest(a) => cmd_manifest(a),
        Command::Mix(a) => cmd_mix(a),
        Command::Calibrate(a) => cmd_calibrate(a),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}
