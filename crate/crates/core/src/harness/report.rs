//! Report files. JSON holds everything; CSV splits into a per-pair table and
//! a `{stem}_aggregates.csv` key/value file that also carries the config.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Aggregates, ConfigEcho, EvalRecord, MetricAggregate, Outcome, RecordStatus, Report, SlpipsAggregate};
use crate::error::{Error, Result};
use crate::mask_maker::WearingStyle;
use crate::perceptual::{SlpipsScore, NUM_LAYERS};
use crate::sdr::SdrPairReport;

/// Tolerance when checking stored aggregates against their records.
pub const AGGREGATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidParams(format!("unknown report format `{other}`"))),
        }
    }
}

fn ser(e: impl std::fmt::Display) -> Error {
    Error::SerializationFailure(e.to_string())
}

pub fn aggregates_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_aggregates.csv"))
}

pub fn write_report(report: &Report, path: &Path, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Json => {
            let text = serde_json::to_string_pretty(report).map_err(ser)?;
            std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
        }
        ReportFormat::Csv => {
            write_records_csv(&report.records, path)?;
            write_aggregates_csv(report, &aggregates_path(path))
        }
    }
}

/// Reads a report and checks that its aggregates agree with its records.
pub fn read_report(path: &Path, format: ReportFormat) -> Result<Report> {
    let report = match format {
        ReportFormat::Json => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<Report>(&text).map_err(ser)?
        }
        ReportFormat::Csv => {
            let records = read_records_csv(path)?;
            let (config, aggregates) = read_aggregates_csv(&aggregates_path(path))?;
            Report { config, aggregates, records }
        }
    };
    let recomputed = Aggregates::compute(&report.records, report.config.config.metric);
    if !report.aggregates.matches(&recomputed, AGGREGATE_TOL) {
        return Err(Error::SerializationFailure(format!(
            "{}: stored aggregates disagree with records",
            path.display()
        )));
    }
    Ok(report)
}

const HEADER: [&str; 27] = [
    "model_id",
    "clothing_id",
    "status",
    "skip_kind",
    "skip_detail",
    "style_real",
    "style_virt",
    "sdr_status",
    "sdr_skip_kind",
    "sdr_skip_detail",
    "s_r",
    "d_r",
    "s_v",
    "d_v",
    "sdr_r",
    "sdr_v",
    "sdr_distance",
    "slpips_status",
    "slpips_skip_kind",
    "slpips_skip_detail",
    "slpips",
    "n_nodes",
    "layer_1",
    "layer_2",
    "layer_3",
    "layer_4",
    "layer_5",
];

fn opt_str<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// `(status, kind, detail)` columns for an optional outcome.
fn outcome_cols<T>(o: &Option<Outcome<T>>) -> [String; 3] {
    match o {
        None => Default::default(),
        Some(Outcome::Ok(_)) => ["Ok".into(), String::new(), String::new()],
        Some(Outcome::Skipped { kind, detail }) => ["Skipped".into(), kind.clone(), detail.clone()],
    }
}

fn record_row(r: &EvalRecord) -> Vec<String> {
    let mut row = vec![r.model_id.clone(), r.clothing_id.clone()];
    match &r.status {
        RecordStatus::Ok => row.extend(["Ok".into(), String::new(), String::new()]),
        RecordStatus::Skipped { kind, detail } => row.extend(["Skipped".into(), kind.clone(), detail.clone()]),
    }
    row.push(opt_str(r.style_real));
    row.push(opt_str(r.style_virt));
    row.extend(outcome_cols(&r.sdr));
    let sdr = r.sdr.as_ref().and_then(Outcome::ok);
    row.push(opt_str(sdr.map(|s| s.s_r)));
    row.push(opt_str(sdr.map(|s| s.d_r)));
    row.push(opt_str(sdr.map(|s| s.s_v)));
    row.push(opt_str(sdr.map(|s| s.d_v)));
    row.push(opt_str(sdr.map(|s| s.sdr_r)));
    row.push(opt_str(sdr.map(|s| s.sdr_v)));
    row.push(opt_str(sdr.map(|s| s.distance)));
    row.extend(outcome_cols(&r.slpips));
    let sl = r.slpips.as_ref().and_then(Outcome::ok);
    row.push(opt_str(sl.map(|s| s.value)));
    row.push(opt_str(sl.map(|s| s.n_nodes)));
    for j in 0..NUM_LAYERS {
        row.push(opt_str(sl.map(|s| s.per_layer[j])));
    }
    row
}

fn write_records_csv(records: &[EvalRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(ser)?;
    w.write_record(HEADER).map_err(ser)?;
    for r in records {
        w.write_record(record_row(r)).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn parse<T: FromStr>(field: &str, col: &str) -> Result<T> {
    field.parse().map_err(|_| Error::SerializationFailure(format!("bad value `{field}` in column {col}")))
}

fn parse_style(s: &str) -> Result<Option<WearingStyle>> {
    match s {
        "" => Ok(None),
        "Interfered" => Ok(Some(WearingStyle::Interfered)),
        "NonInterfered" => Ok(Some(WearingStyle::NonInterfered)),
        other => Err(Error::SerializationFailure(format!("unknown wearing style `{other}`"))),
    }
}

fn parse_outcome<T>(cols: &[&str], value: impl FnOnce() -> Result<T>) -> Result<Option<Outcome<T>>> {
    match cols[0] {
        "" => Ok(None),
        "Ok" => Ok(Some(Outcome::Ok(value()?))),
        "Skipped" => Ok(Some(Outcome::Skipped { kind: cols[1].into(), detail: cols[2].into() })),
        other => Err(Error::SerializationFailure(format!("unknown outcome `{other}`"))),
    }
}

fn parse_row(f: &[&str]) -> Result<EvalRecord> {
    if f.len() != HEADER.len() {
        return Err(Error::SerializationFailure(format!("row has {} fields, want {}", f.len(), HEADER.len())));
    }
    let col = |i: usize| (f[i], HEADER[i]);
    let num = |i: usize| -> Result<f64> { parse(col(i).0, col(i).1) };
    let cnt = |i: usize| -> Result<u64> { parse(col(i).0, col(i).1) };
    let status = match f[2] {
        "Ok" => RecordStatus::Ok,
        "Skipped" => RecordStatus::Skipped { kind: f[3].into(), detail: f[4].into() },
        other => return Err(Error::SerializationFailure(format!("unknown status `{other}`"))),
    };
    let sdr = parse_outcome(&f[7..10], || {
        Ok(SdrPairReport {
            s_r: cnt(10)?,
            d_r: cnt(11)?,
            s_v: cnt(12)?,
            d_v: cnt(13)?,
            sdr_r: num(14)?,
            sdr_v: num(15)?,
            distance: num(16)?,
        })
    })?;
    let slpips = parse_outcome(&f[17..20], || {
        let mut per_layer = [0.0; NUM_LAYERS];
        for (j, v) in per_layer.iter_mut().enumerate() {
            *v = num(22 + j)?;
        }
        Ok(SlpipsScore { value: num(20)?, n_nodes: parse(f[21], HEADER[21])?, per_layer })
    })?;
    Ok(EvalRecord {
        model_id: f[0].into(),
        clothing_id: f[1].into(),
        status,
        style_real: parse_style(f[5])?,
        style_virt: parse_style(f[6])?,
        sdr,
        slpips,
    })
}

fn read_records_csv(path: &Path) -> Result<Vec<EvalRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| ser(format!("{}: {e}", path.display())))?;
    let header = rdr.headers().map_err(ser)?;
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::SerializationFailure(format!("{}: unexpected header", path.display())));
    }
    rdr.records()
        .map(|row| {
            let row = row.map_err(ser)?;
            parse_row(&row.iter().collect::<Vec<_>>())
        })
        .collect()
}

fn write_aggregates_csv(report: &Report, path: &Path) -> Result<()> {
    let a = &report.aggregates;
    let mut rows: Vec<(String, String)> = vec![
        ("records".into(), a.records.to_string()),
        ("skipped_records".into(), a.skipped_records.to_string()),
    ];
    if let Some(s) = &a.sdr {
        rows.push(("sdr.mean".into(), s.mean.to_string()));
        rows.push(("sdr.count".into(), s.count.to_string()));
        rows.push(("sdr.skipped".into(), s.skipped.to_string()));
    }
    if let Some(s) = &a.slpips {
        rows.push(("slpips.mean".into(), s.mean.to_string()));
        for (j, v) in s.per_layer.iter().enumerate() {
            rows.push((format!("slpips.layer_{}", j + 1), v.to_string()));
        }
        rows.push(("slpips.count".into(), s.count.to_string()));
        rows.push(("slpips.skipped".into(), s.skipped.to_string()));
    }
    rows.push(("config".into(), serde_json::to_string(&report.config).map_err(ser)?));
    let mut w = csv::Writer::from_path(path).map_err(ser)?;
    w.write_record(["key", "value"]).map_err(ser)?;
    for (k, v) in rows {
        w.write_record([k, v]).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_aggregates_csv(path: &Path) -> Result<(ConfigEcho, Aggregates)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| ser(format!("{}: {e}", path.display())))?;
    let mut kv = std::collections::HashMap::new();
    for row in rdr.records() {
        let row = row.map_err(ser)?;
        kv.insert(row.get(0).unwrap_or_default().to_string(), row.get(1).unwrap_or_default().to_string());
    }
    let get = |k: &str| kv.get(k).map(String::as_str).ok_or_else(|| ser(format!("missing aggregate `{k}`")));
    let config: ConfigEcho = serde_json::from_str(get("config")?).map_err(ser)?;
    let sdr = match kv.contains_key("sdr.mean") {
        false => None,
        true => Some(MetricAggregate {
            mean: parse(get("sdr.mean")?, "sdr.mean")?,
            count: parse(get("sdr.count")?, "sdr.count")?,
            skipped: parse(get("sdr.skipped")?, "sdr.skipped")?,
        }),
    };
    let slpips = match kv.contains_key("slpips.mean") {
        false => None,
        true => {
            let mut per_layer = [0.0; NUM_LAYERS];
            for (j, v) in per_layer.iter_mut().enumerate() {
                let k = format!("slpips.layer_{}", j + 1);
                *v = parse(get(&k)?, &k)?;
            }
            Some(SlpipsAggregate {
                mean: parse(get("slpips.mean")?, "slpips.mean")?,
                per_layer,
                count: parse(get("slpips.count")?, "slpips.count")?,
                skipped: parse(get("slpips.skipped")?, "slpips.skipped")?,
            })
        }
    };
    let aggregates = Aggregates {
        records: parse(get("records")?, "records")?,
        skipped_records: parse(get("skipped_records")?, "skipped_records")?,
        sdr,
        slpips,
    };
    Ok((config, aggregates))
}
