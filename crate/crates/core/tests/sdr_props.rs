use std::sync::Arc;

use proptest::prelude::*;
use tryon_eval::annotations::{
    default_upper_body_parts, region_area, region_intersection_area, DenseposeMap, LabelMap, LabelSchema, LabelSet,
    Role, Selector,
};
use tryon_eval::sdr::{sdr, sdr_distance, sdr_distance_general, sdr_factors, sdr_inputs_from_maps, SdrInputs};
use tryon_eval::Exact;

fn inputs() -> impl Strategy<Value = SdrInputs> {
    (1u64..=1_000_000, 1u64..=1_000_000)
        .prop_flat_map(|(s, d)| (Just(s), Just(d), 1..=s.min(d)))
        .prop_map(|(s, d, sd)| SdrInputs::new(s, d, sd).unwrap())
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn general_form_with_real_factors_equals_closed_form(r in inputs(), v in inputs()) {
        let general = sdr_distance_general(&r, &v, sdr_factors::<f64>(&r).unwrap()).unwrap().value;
        let closed = sdr_distance::<f64>(&r, &v).unwrap().value;
        prop_assert!(rel_close(general, closed, 1e-9), "{general} vs {closed}");
        let ge = sdr_distance_general(&r, &v, sdr_factors::<Exact>(&r).unwrap()).unwrap().value;
        let ce = sdr_distance::<Exact>(&r, &v).unwrap().value;
        prop_assert_eq!(ge, ce);
    }

    #[test]
    fn distance_is_scale_invariant(r in inputs(), v in inputs(), k in 1u64..50) {
        let scale = |i: &SdrInputs| SdrInputs::new(i.s * k, i.d * k, i.sd * k).unwrap();
        let a = sdr_distance::<Exact>(&r, &v).unwrap().value;
        let b = sdr_distance::<Exact>(&scale(&r), &scale(&v)).unwrap().value;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn distance_grows_with_virtual_excess(r in inputs(), extra in 1u64..1000) {
        // Once the virtual ratio exceeds the real one, more garment area means
        // a larger distance.
        let v1 = SdrInputs::new(r.s * 2, r.d, 0).unwrap();
        let v2 = SdrInputs { s: v1.s + extra, ..v1 };
        let a = sdr_distance::<Exact>(&r, &v1).unwrap().value;
        let b = sdr_distance::<Exact>(&r, &v2).unwrap().value;
        prop_assert!(b > a);
    }

    #[test]
    fn identity_is_zero(r in inputs()) {
        prop_assert_eq!(sdr_distance::<f64>(&r, &r).unwrap().value, 0.0);
        prop_assert!(sdr::<f64>(&r).unwrap() > 0.0);
    }

    #[test]
    fn f32_tracks_f64(r in inputs(), v in inputs()) {
        let a = sdr_distance::<f64>(&r, &v).unwrap().value;
        let b = sdr_distance::<f32>(&r, &v).unwrap().value as f64;
        prop_assert!(rel_close(a, b, 1e-5));
    }
}

fn small_maps() -> impl Strategy<Value = (usize, usize, Vec<u8>, Vec<u8>)> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        (Just(w), Just(h), prop::collection::vec(0u8..20, w * h), prop::collection::vec(0u8..=24, w * h))
    })
}

proptest! {
    #[test]
    fn disjoint_selectors_add_up((w, h, labels, parts) in small_maps(), split in 0u8..20) {
        let schema = Arc::new(LabelSchema::default());
        let parse = LabelMap::new(w, h, labels, schema).unwrap();
        let a = LabelSet::from_ids(0..split);
        let b = LabelSet::from_ids(split..20);
        let whole = region_area(&parse, &Selector::Ids(a.union(&b))).unwrap();
        let sum = region_area(&parse, &Selector::Ids(a)).unwrap() + region_area(&parse, &Selector::Ids(b)).unwrap();
        prop_assert_eq!(whole, sum);
        prop_assert_eq!(whole, (w * h) as u64);

        let dp = DenseposeMap::new(w, h, parts, default_upper_body_parts()).unwrap();
        let top = Selector::Role(Role::UpperClothes);
        let inter = region_intersection_area(&parse, &top, &dp, &Selector::UpperBody).unwrap();
        let s = region_area(&parse, &top).unwrap();
        let d = region_area(&dp, &Selector::UpperBody).unwrap();
        prop_assert!(inter <= s.min(d));
        let i = sdr_inputs_from_maps(&parse, &dp).unwrap();
        prop_assert_eq!((i.s, i.d, i.sd), (s, d, inter));
    }

    #[test]
    fn label_map_png_round_trip((w, h, labels, _) in small_maps()) {
        let schema = Arc::new(LabelSchema::default());
        let parse = LabelMap::new(w, h, labels, schema.clone()).unwrap();
        let back = LabelMap::from_png_bytes(&parse.to_png_bytes(), schema).unwrap();
        prop_assert_eq!(back.labels(), parse.labels());
        prop_assert_eq!(back.dims(), (w, h));
    }
}

#[test]
fn mismatched_maps_are_rejected() {
    let schema = Arc::new(LabelSchema::default());
    let parse = LabelMap::filled(4, 4, 5, schema);
    let dp = DenseposeMap::filled(4, 5, 2, default_upper_body_parts());
    assert!(sdr_inputs_from_maps(&parse, &dp).is_err());
}
