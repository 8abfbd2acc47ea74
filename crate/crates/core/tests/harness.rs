use tryon_eval::annotations::Role;
use tryon_eval::harness::{
    evaluate_manifest, evaluate_pair, gen_cross_manifest, mix_experiment, read_report, write_report, DatasetLayout,
    EvalConfig, Manifest, MetricSel, MixSample, MixSpec, Outcome, Pair, RecordStatus, ReportFormat, UnusedReference,
};
use tryon_eval::perceptual::{GradientPyramid, PatchSize};
use tryon_eval::synth::{random_spec, render, write_dataset, write_generated};
use tryon_eval::Error;

fn config() -> EvalConfig {
    EvalConfig { patch: PatchSize::square(32), ..EvalConfig::default() }
}

#[test]
fn identical_pair_scores_zero() {
    let b = render("00001_00", &random_spec(8, 96, 128));
    let r = evaluate_pair(&b, &b, &config(), &GradientPyramid);
    assert!(r.is_ok());
    assert_eq!(r.sdr_distance(), Some(0.0));
    assert_eq!(r.slpips_value(), Some(0.0));
    assert_eq!(r.pair(), Pair::new("00001_00", "00001_00"));
    assert_eq!(r.style_real, r.style_virt);
}

#[test]
fn virtual_without_top_is_maximally_off() {
    let real = render("r", &random_spec(9, 96, 128));
    let mut virt = real.clone();
    virt.sample_id = "v".into();
    let top = virt.parse.role_ids(Role::UpperClothes);
    let (w, h) = virt.parse.dims();
    let labels = (0..w * h).map(|i| if top.contains(virt.parse.labels()[i]) { 0 } else { virt.parse.labels()[i] });
    virt.parse = tryon_eval::annotations::LabelMap::new(w, h, labels.collect(), virt.parse.schema().clone().into()).unwrap();

    let r = evaluate_pair(&real, &virt, &config(), &GradientPyramid);
    assert_eq!(r.sdr_distance(), Some(1.0));
    // The real map still places nodes on the garment.
    assert!(r.slpips_value().is_some());

    let own = EvalConfig { unused_reference: UnusedReference::Own, ..config() };
    let r = evaluate_pair(&real, &virt, &own, &GradientPyramid);
    assert_eq!(r.sdr_distance(), Some(1.0));
    assert_eq!(r.slpips.as_ref().and_then(Outcome::skip_kind), Some("NoActiveNodes"));
    assert!(r.is_ok());
}

#[test]
fn size_mismatch_skips_the_pair() {
    let real = render("r", &random_spec(1, 96, 128));
    let virt = render("v", &random_spec(1, 80, 128));
    let r = evaluate_pair(&real, &virt, &config(), &GradientPyramid);
    assert!(matches!(&r.status, RecordStatus::Skipped { kind, .. } if kind == "DimensionMismatch"));
    assert!(r.sdr.is_none() && r.slpips.is_none() && !r.is_ok());
}

#[test]
fn empty_manifest_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let m = Manifest::new(vec![]).unwrap();
    let rep = evaluate_manifest(&m, &DatasetLayout::new(dir.path()), &config(), &GradientPyramid, 2).unwrap();
    assert!(rep.records.is_empty());
    assert_eq!(rep.aggregates.records, 0);
    assert_eq!(rep.aggregates.sdr.unwrap().mean, 0.0);
    assert_eq!(rep.aggregates.slpips.unwrap().count, 0);
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let ds = write_dataset(dir.path(), 4, 96, 128, 3).unwrap();
    let cfg = config();
    let out = dir.path().join("r1.json");
    let mut bytes = Vec::new();
    for workers in [1, 3, 8] {
        let rep = evaluate_manifest(&ds.manifest, &ds.layout, &cfg, &GradientPyramid, workers).unwrap();
        assert_eq!(rep.records.len(), 16);
        assert_eq!(rep.ok_count(), 16);
        let order: Vec<Pair> = rep.records.iter().map(|r| r.pair()).collect();
        assert_eq!(order, ds.manifest.entries);
        write_report(&rep, &out, ReportFormat::Json).unwrap();
        bytes.push(std::fs::read(&out).unwrap());
    }
    assert!(bytes.windows(2).all(|w| w[0] == w[1]));
    assert!(evaluate_manifest(&ds.manifest, &ds.layout, &cfg, &GradientPyramid, 0).is_err());
}

#[test]
fn full_cross_manifest_yields_every_record() {
    let dir = tempfile::tempdir().unwrap();
    let ds = write_dataset(dir.path(), 27, 48, 64, 1).unwrap();
    assert_eq!(ds.manifest.len(), 729);
    let cfg = EvalConfig { metric: MetricSel::Sdr, ..config() };
    let rep = evaluate_manifest(&ds.manifest, &ds.layout, &cfg, &GradientPyramid, 4).unwrap();
    assert_eq!(rep.records.len(), 729);
    assert!(rep.records.iter().all(|r| r.slpips.is_none()));
    assert!(rep.aggregates.slpips.is_none());
}

#[test]
fn missing_files_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let ds = write_dataset(dir.path(), 2, 96, 128, 0).unwrap();
    let gone = ds.layout.generated_paths(&Pair::new(&ds.ids[0], &ds.ids[1]));
    std::fs::remove_file(&gone.parse).unwrap();
    std::fs::remove_file(ds.layout.real_paths(&ds.ids[1]).densepose).unwrap();
    match evaluate_manifest(&ds.manifest, &ds.layout, &config(), &GradientPyramid, 1) {
        Err(Error::DatasetResolutionFailure { missing }) => {
            assert_eq!(missing.len(), 2);
            assert!(missing.contains(&gone.parse));
        }
        other => panic!("{:?}", other.map(|r| r.records.len())),
    }
    let nowhere = DatasetLayout::new(dir.path().join("nope"));
    assert!(matches!(
        evaluate_manifest(&ds.manifest, &nowhere, &config(), &GradientPyramid, 1),
        Err(Error::DatasetResolutionFailure { .. })
    ));
}

#[test]
fn unreadable_generated_sample_is_skipped_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let ds = write_dataset(dir.path(), 2, 96, 128, 0).unwrap();
    let broken = Pair::new(&ds.ids[1], &ds.ids[0]);
    std::fs::write(ds.layout.generated_paths(&broken).image, b"not a png").unwrap();
    let rep = evaluate_manifest(&ds.manifest, &ds.layout, &config(), &GradientPyramid, 2).unwrap();
    assert_eq!(rep.ok_count(), 3);
    assert_eq!(rep.aggregates.skipped_records, 1);
    let bad = rep.records.iter().find(|r| r.pair() == broken).unwrap();
    assert!(!bad.is_ok());
}

#[test]
fn reports_round_trip_and_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let ds = write_dataset(dir.path(), 3, 96, 128, 5).unwrap();
    // One pair with a smaller generated image, so the report holds a skip.
    let odd = Pair::new(&ds.ids[0], &ds.ids[2]);
    write_generated(&ds.layout, &ds.ids, &ds.specs, &odd, |s| tryon_eval::synth::PersonSpec { width: 90, ..s }).unwrap();
    let rep = evaluate_manifest(&ds.manifest, &ds.layout, &config(), &GradientPyramid, 2).unwrap();
    assert_eq!(rep.aggregates.skipped_records, 1);

    let json = dir.path().join("report.json");
    write_report(&rep, &json, ReportFormat::Json).unwrap();
    assert_eq!(read_report(&json, ReportFormat::Json).unwrap(), rep);

    let csv = dir.path().join("report.csv");
    write_report(&rep, &csv, ReportFormat::Csv).unwrap();
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), rep.records.len() + 1);
    assert_eq!(read_report(&csv, ReportFormat::Csv).unwrap(), rep);

    let mut tampered = rep.clone();
    tampered.aggregates.sdr.as_mut().unwrap().mean += 1e-6;
    for (path, fmt) in [(&json, ReportFormat::Json), (&csv, ReportFormat::Csv)] {
        write_report(&tampered, path, fmt).unwrap();
        assert!(matches!(read_report(path, fmt), Err(Error::SerializationFailure(_))));
    }
}

#[test]
fn mixing_records_interpolates_between_pools() {
    let dir = tempfile::tempdir().unwrap();
    let ds = write_dataset(dir.path(), 3, 96, 128, 2).unwrap();
    let rep = evaluate_manifest(&ds.manifest, &ds.layout, &config(), &GradientPyramid, 2).unwrap();
    let (selfs, cross): (Vec<_>, Vec<_>) = rep.records.iter().partition(|r| r.model_id == r.clothing_id);
    let correct: Vec<MixSample> = selfs.iter().map(|r| MixSample::from_record(r)).collect();
    let incorrect: Vec<MixSample> = cross.iter().map(|r| MixSample::from_record(r)).collect();
    let rows = mix_experiment(&MixSpec::default(), &correct, &incorrect).unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0].mean_sdr, Some(0.0));
    assert_eq!(rows[0].mean_slpips, Some(0.0));
    let first = |f: fn(&MixSample) -> Option<f64>| incorrect[..3].iter().map(|s| f(s).unwrap()).sum::<f64>() / 3.0;
    assert!((rows[5].mean_sdr.unwrap() - first(|s| s.sdr)).abs() < 1e-12);
    assert!((rows[5].mean_slpips.unwrap() - first(|s| s.slpips)).abs() < 1e-12);
}

#[test]
fn cross_manifest_is_square() {
    for n in [1usize, 2, 5, 27] {
        let ids: Vec<String> = (0..n).map(|i| format!("id{i}")).collect();
        assert_eq!(gen_cross_manifest(&ids).unwrap().len(), n * n);
    }
}
