use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tryon_eval::annotations::RgbImage;
use tryon_eval::perceptual::{
    extract_patch, extract_patches, layer_distance, load_backend, slpips, BackendKind, FeatureBackend,
    GradientPyramid, LinearWeights, Patch, PatchSize, Slpips,
};
use tryon_eval::skeleton::{build_grid, common_active};
use tryon_eval::synth::{random_spec, render};
use tryon_eval::{Error, SkeletonGrid, SkeletonGridF32};

const PATCH: PatchSize = PatchSize { h: 32, w: 32 };

/// Gray (128) against white, every layer, deterministic backend. Flat
/// patches have empty histograms, so this is sum((a/|a| - b/|b|)^2) / 12 with
/// a = (g, g, g, 1), b = (1, 1, 1, 1), g = 128/255 (0.00907607057974968 when
/// evaluated independently).
const GOLDEN_GRAY_WHITE: f64 = 0.009_076_070_579_749_72;

fn flat_patch(v: u8) -> Patch {
    extract_patch(&RgbImage::filled(64, 64, [v; 3]), (32, 32), 0, PATCH)
}

fn noisy(image: &RgbImage, amplitude: f64, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let px = image
        .pixels()
        .iter()
        .map(|&v| {
            let u: f64 = rng.random_range(-1.0..=1.0);
            (v as f64 + (u * amplitude).round()).clamp(0.0, 255.0) as u8
        })
        .collect();
    RgbImage::new(image.width(), image.height(), px).unwrap()
}

fn fixture(seed: u64) -> (RgbImage, SkeletonGrid) {
    let b = render("p", &random_spec(seed, 96, 128));
    let g: SkeletonGrid = build_grid(&b.keypoints).unwrap();
    let g = g.filter_missed(&b.densepose).unwrap().filter_unused(&b.parse).unwrap();
    (b.image, g)
}

#[test]
fn gray_against_white_golden() {
    let (gray, white) = (flat_patch(128), flat_patch(255));
    for j in 1..=5 {
        let d: f64 = layer_distance(&GradientPyramid, j, &gray, &white).unwrap();
        assert!((d - GOLDEN_GRAY_WHITE).abs() < 1e-15, "layer {j}: {d:.18}");
        let back: f64 = layer_distance(&GradientPyramid, j, &white, &gray).unwrap();
        assert_eq!(d, back);
        assert_eq!(layer_distance::<f64>(&GradientPyramid, j, &gray, &gray).unwrap(), 0.0);
    }
    assert!(layer_distance::<f64>(&GradientPyramid, 0, &gray, &white).is_err());
    assert!(layer_distance::<f64>(&GradientPyramid, 6, &gray, &white).is_err());
}

#[test]
fn identical_inputs_score_zero() {
    for seed in 0..5 {
        let (img, g) = fixture(seed);
        let s = slpips(&img, &img, &g, &g, &GradientPyramid, PATCH).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.n_nodes, g.active_count());
        let g32: SkeletonGridF32 = build_grid(&render("p", &random_spec(seed, 96, 128)).keypoints).unwrap();
        let s32 = slpips(&img, &img, &g32, &g32, &GradientPyramid, PATCH).unwrap();
        assert!(s32.value.abs() <= 1e-6);
    }
}

#[test]
fn score_ignores_index_order() {
    let (img, g) = fixture(7);
    let other = noisy(&img, 20.0, 1);
    let eval = Slpips::new(&GradientPyramid, PATCH);
    let mut idx = common_active(&g, &g);
    let a = eval.score_nodes(&img, &other, &g, &g, &idx).unwrap();
    idx.reverse();
    idx.rotate_left(3);
    let b = eval.score_nodes(&img, &other, &g, &g, &idx).unwrap();
    assert_eq!(a, b);
    let mean = a.per_layer.iter().sum::<f64>() / 5.0;
    assert_eq!(a.value, mean);
    assert!(a.per_layer.iter().all(|&v| v >= 0.0));
}

#[test]
fn more_noise_scores_higher() {
    for seed in 0..4 {
        let (img, g) = fixture(seed);
        let scores: Vec<f64> = [8.0, 16.0, 32.0]
            .iter()
            .map(|a| slpips(&img, &noisy(&img, *a, 99), &g, &g, &GradientPyramid, PATCH).unwrap().value)
            .collect();
        assert!(scores[0] > 0.0 && scores[0] < scores[1] && scores[1] < scores[2], "seed {seed}: {scores:?}");
    }
}

#[test]
fn no_common_nodes_is_an_error() {
    let (img, g) = fixture(1);
    let mut dead = g.clone();
    for n in &mut dead.nodes {
        n.status = tryon_eval::skeleton::NodeStatus::Unused;
    }
    assert!(matches!(slpips(&img, &img, &g, &dead, &GradientPyramid, PATCH), Err(Error::NoActiveNodes)));
    assert!(matches!(extract_patches(&img, &g, &[], PATCH), Err(Error::NoActiveNodes)));
    assert!(extract_patches(&img, &g, &[0], PatchSize::square(12)).is_err());
}

#[test]
fn loaded_deterministic_backend_reports_itself() {
    let b = load_backend::<f64>(BackendKind::DeterministicTest, None).unwrap();
    assert!(b.info().deterministic);
    assert_eq!(b.info().channels, [12; 5]);
    let maps = b.features(&flat_patch(10)).unwrap();
    assert_eq!(maps.len(), 5);
}

#[test]
fn linear_weights_must_match_channels() {
    let ok = LinearWeights { layers: vec![vec![1.0; 12]; 5] };
    let bad = LinearWeights { layers: vec![vec![1.0; 11]; 5] };
    let eval = Slpips::<f64>::new(&GradientPyramid, PATCH);
    assert!(Slpips::<f64>::new(&GradientPyramid, PATCH).with_weights(&bad).is_err());
    let weighted = Slpips::<f64>::new(&GradientPyramid, PATCH).with_weights(&ok).unwrap();
    let (gray, white) = (flat_patch(128), flat_patch(255));
    let plain = eval.patch_distances(&gray, &white).unwrap();
    let summed = weighted.patch_distances(&gray, &white).unwrap();
    for (p, s) in plain.iter().zip(&summed) {
        assert!((s - 12.0 * p).abs() < 1e-12);
    }
}

#[test]
fn features_are_bit_stable() {
    let (img, g) = fixture(2);
    let idx: Vec<usize> = g.active().collect();
    let patches = extract_patches(&img, &g, &idx, PATCH).unwrap();
    let a = FeatureBackend::<f64>::features(&GradientPyramid, &patches[0]).unwrap();
    let b = FeatureBackend::<f64>::features(&GradientPyramid, &patches[0]).unwrap();
    assert_eq!(a, b);
}
