use tryon_eval::annotations::validate_bundle;
use tryon_eval::mask_maker::{determine_style, MaskParams, WearingStyle};
use tryon_eval::sdr::sdr_inputs_from_maps;
use tryon_eval::skeleton::{build_grid, NodeStatus, Region};
use tryon_eval::synth::{random_spec, render};
use tryon_eval::SkeletonGrid;

#[test]
fn fixtures_are_consistent_and_cover_both_styles() {
    let params = MaskParams::default();
    let mut styles = [0usize; 2];
    for seed in 0..40 {
        let spec = random_spec(seed, 96, 128);
        let b = render("s", &spec);
        assert!(validate_bundle(&b).is_empty(), "seed {seed}: {:?}", validate_bundle(&b));
        let d = determine_style(&b, &params).unwrap();
        let tucked = (0.7..1.0).contains(&spec.garment.hem);
        let want = if tucked { WearingStyle::Interfered } else { WearingStyle::NonInterfered };
        assert_eq!(d.style, want, "seed {seed}: {d:?}");
        styles[(d.style == WearingStyle::NonInterfered) as usize] += 1;

        let i = sdr_inputs_from_maps(&b.parse, &b.densepose).unwrap();
        assert!(i.s > 0 && i.d > 0 && i.sd > 0);

        let g: SkeletonGrid = build_grid(&b.keypoints).unwrap();
        let g = g.filter_missed(&b.densepose).unwrap();
        let torso = g.nodes.iter().filter(|n| n.region == Region::Torso && n.status == NodeStatus::Active).count();
        assert!(torso >= 20, "seed {seed}: {torso} torso nodes visible");
        let arms = g.active_count() - torso;
        assert!(arms >= 8, "seed {seed}: {arms} arm nodes visible");
        let u = g.filter_unused(&b.parse).unwrap();
        assert!(u.active_count() >= 10, "seed {seed}: {}", u.active_count());
    }
    assert!(styles[0] >= 10 && styles[1] >= 10, "{styles:?}");
}
