//! Procedurally drawn people with consistent image, keypoints, parsing and
//! densepose layers. Used by the test suites and handy for smoke runs of the
//! command-line tool without a real dataset.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotations::{
    default_upper_body_parts, AnnotationBundle, BundlePaths, DenseposeMap, Joint, Keypoints, LabelMap, LabelSchema,
    RgbImage,
};
use crate::error::{Error, Result};
use crate::harness::{gen_cross_manifest, DatasetLayout, Manifest, Pair};

// Default CIHP ids used when painting.
const BACKGROUND: u8 = 0;
const HAIR: u8 = 2;
const TOP: u8 = 5;
const PANTS: u8 = 9;
const NECK: u8 = 10;
const FACE: u8 = 13;
const LEFT_ARM: u8 = 14;
const RIGHT_ARM: u8 = 15;

const SKIN: [u8; 3] = [224, 172, 140];
const HAIR_RGB: [u8; 3] = [48, 34, 22];

/// Body geometry in pixels. The person faces the camera, so the right side
/// of the body is on the left of the image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub cx: f64,
    pub shoulder_y: f64,
    pub hip_y: f64,
    pub half_shoulder: f64,
    pub half_hip: f64,
    /// Horizontal offset of the elbows beyond the shoulders.
    pub elbow_out: f64,
    pub arm_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Garment {
    /// Hem height as a fraction of the shoulder-to-hip distance; above 1 the
    /// top hangs over the trousers, below 1 it is tucked in.
    pub hem: f64,
    pub sleeves: bool,
    pub top: [u8; 3],
    pub bottom: [u8; 3],
    /// Row period of the stripe pattern on the top.
    pub stripe: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersonSpec {
    pub width: usize,
    pub height: usize,
    pub body: Body,
    pub garment: Garment,
    /// Seeds the pixel noise.
    pub seed: u64,
}

pub fn random_body(rng: &mut impl Rng, width: usize, height: usize) -> Body {
    let (w, h) = (width as f64, height as f64);
    let half_shoulder = rng.random_range(0.13..0.15) * w;
    let body_h = rng.random_range(0.4..0.46) * h;
    let shoulder_y = rng.random_range(0.26..0.3) * h;
    Body {
        cx: w / 2.0 + rng.random_range(-0.04..0.04) * w,
        shoulder_y,
        hip_y: shoulder_y + body_h,
        half_shoulder,
        half_hip: half_shoulder * rng.random_range(0.75..0.88),
        elbow_out: rng.random_range(0.04..0.07) * w,
        arm_radius: (0.035 * w).max(2.5),
    }
}

pub fn random_garment(rng: &mut impl Rng) -> Garment {
    // Tucked in, hanging over the trousers, or cropped above the waist.
    let hem = match rng.random_range(0..3) {
        0 => rng.random_range(0.9..0.95),
        1 => rng.random_range(1.12..1.25),
        _ => rng.random_range(0.5..0.6),
    };
    Garment {
        hem,
        sleeves: rng.random_bool(0.5),
        top: [rng.random_range(30..220), rng.random_range(30..220), rng.random_range(30..220)],
        bottom: [rng.random_range(20..120), rng.random_range(20..120), rng.random_range(60..160)],
        stripe: rng.random_range(4..9),
    }
}

pub fn random_spec(seed: u64, width: usize, height: usize) -> PersonSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let body = random_body(&mut rng, width, height);
    let garment = random_garment(&mut rng);
    PersonSpec { width, height, body, garment, seed }
}

fn seg_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0) };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

impl Body {
    fn torso_height(&self) -> f64 {
        self.hip_y - self.shoulder_y
    }

    /// Half width of the torso at row `y`.
    fn half_width(&self, y: f64) -> f64 {
        let t = ((y - self.shoulder_y) / self.torso_height()).clamp(0.0, 1.0);
        self.half_shoulder + (self.half_hip - self.half_shoulder) * t
    }

    fn shoulders(&self) -> [(f64, f64); 2] {
        [(self.cx - self.half_shoulder, self.shoulder_y), (self.cx + self.half_shoulder, self.shoulder_y)]
    }

    /// Shoulder, elbow and wrist of the image-left (right) and image-right
    /// (left) arm.
    fn arms(&self) -> [[(f64, f64); 3]; 2] {
        let th = self.torso_height();
        let [rs, ls] = self.shoulders();
        let re = (rs.0 - self.elbow_out, rs.1 + 0.5 * th);
        let rw = (re.0 - 0.4 * self.elbow_out, re.1 + 0.45 * th);
        let le = (ls.0 + self.elbow_out, ls.1 + 0.5 * th);
        let lw = (le.0 + 0.4 * self.elbow_out, le.1 + 0.45 * th);
        [[rs, re, rw], [ls, le, lw]]
    }

    fn head(&self) -> ((f64, f64), f64) {
        let r = 0.55 * self.half_shoulder;
        ((self.cx, self.shoulder_y - 0.45 * self.half_shoulder - r), r)
    }

    pub fn keypoints(&self, width: usize, height: usize) -> Keypoints {
        let mut flat = vec![0.0; 75];
        let mut put = |j: Joint, p: (f64, f64)| {
            let i = j as usize * 3;
            flat[i..i + 3].copy_from_slice(&[p.0, p.1, 0.9]);
        };
        let [[rs, re, rw], [ls, le, lw]] = self.arms();
        let (head, _) = self.head();
        put(Joint::Nose, head);
        put(Joint::Neck, (self.cx, self.shoulder_y));
        put(Joint::RShoulder, rs);
        put(Joint::RElbow, re);
        put(Joint::RWrist, rw);
        put(Joint::LShoulder, ls);
        put(Joint::LElbow, le);
        put(Joint::LWrist, lw);
        put(Joint::MidHip, (self.cx, self.hip_y));
        put(Joint::RHip, (self.cx - self.half_hip, self.hip_y));
        put(Joint::LHip, (self.cx + self.half_hip, self.hip_y));
        Keypoints::from_flat(&flat, width, height).expect("75 values")
    }
}

/// Layer values at one pixel.
struct Cell {
    label: u8,
    part: u8,
    rgb: [u8; 3],
}

fn cell(spec: &PersonSpec, x: f64, y: f64) -> Cell {
    let b = &spec.body;
    let g = &spec.garment;
    let th = b.torso_height();
    let hem_y = b.shoulder_y + g.hem * th;
    let waist_y = b.hip_y - 0.12 * th;
    let (head, head_r) = b.head();
    let p = (x, y);

    let hd = ((x - head.0).powi(2) + (y - head.1).powi(2)).sqrt();
    if hd <= head_r {
        return if y < head.1 - 0.35 * head_r {
            Cell { label: HAIR, part: 23, rgb: HAIR_RGB }
        } else {
            Cell { label: FACE, part: 23, rgb: SKIN }
        };
    }
    let in_rows = |lo: f64, hi: f64| y >= lo && y <= hi;
    let in_torso_cols = (x - b.cx).abs() <= b.half_width(y);
    let in_body = in_rows(b.shoulder_y, b.hip_y) && in_torso_cols;
    let torso_part = if y < (b.shoulder_y + b.hip_y) / 2.0 { 2 } else { 1 };
    let stripe = if (y as usize / g.stripe).is_multiple_of(2) { 0 } else { 36 };
    let top_rgb = g.top.map(|c| c.saturating_add(stripe));

    // The top is cut a little looser than the body.
    let in_top_cols = (x - b.cx).abs() <= b.half_width(y) + 2.0;
    if in_rows(b.shoulder_y, hem_y) && in_top_cols {
        return Cell { label: TOP, part: if in_body { torso_part } else { 0 }, rgb: top_rgb };
    }
    if in_body && y < waist_y {
        // Skin showing between a short top and the trousers.
        return Cell { label: NECK, part: torso_part, rgb: SKIN };
    }
    let pants_x = (x - b.cx).abs() <= b.half_hip + 1.0;
    if y >= waist_y && pants_x && y <= spec.height as f64 - 3.0 {
        let part = if in_body { torso_part } else if x < b.cx { 7 } else { 8 };
        return Cell { label: PANTS, part, rgb: g.bottom };
    }
    for (side, chain) in b.arms().into_iter().enumerate() {
        let upper = seg_dist(p, chain[0], chain[1]);
        let lower = seg_dist(p, chain[1], chain[2]);
        if upper.min(lower) <= b.arm_radius {
            let is_upper = upper <= lower;
            let (label, part) = match (side, is_upper) {
                (0, true) => (RIGHT_ARM, 16),
                (0, false) => (RIGHT_ARM, 20),
                (_, true) => (LEFT_ARM, 15),
                (_, false) => (LEFT_ARM, 19),
            };
            if g.sleeves && is_upper {
                return Cell { label: TOP, part, rgb: top_rgb };
            }
            return Cell { label, part, rgb: SKIN };
        }
    }
    if (x - b.cx).abs() <= 0.3 * b.half_shoulder && y >= head.1 && y < b.shoulder_y {
        return Cell { label: NECK, part: 0, rgb: SKIN };
    }
    Cell { label: BACKGROUND, part: 0, rgb: [198, 200, 206] }
}

/// Draws the person described by `spec`.
pub fn render(sample_id: &str, spec: &PersonSpec) -> AnnotationBundle {
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_f00d);
    let mut labels = vec![0u8; w * h];
    let mut parts = vec![0u8; w * h];
    let mut pixels = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let c = cell(spec, x as f64, y as f64);
            labels[y * w + x] = c.label;
            parts[y * w + x] = c.part;
            for v in c.rgb {
                pixels.push(v.saturating_add_signed(rng.random_range(-5i8..=5)));
            }
        }
    }
    AnnotationBundle {
        sample_id: sample_id.to_string(),
        image: RgbImage::new(w, h, pixels).expect("sized buffer"),
        keypoints: spec.body.keypoints(w, h),
        parse: LabelMap::new(w, h, labels, Arc::new(LabelSchema::default())).expect("sized buffer"),
        densepose: DenseposeMap::new(w, h, parts, default_upper_body_parts()).expect("valid parts"),
    }
}

pub fn write_bundle(bundle: &AnnotationBundle, paths: &BundlePaths) -> Result<()> {
    for p in [&paths.image, &paths.keypoints, &paths.parse, &paths.densepose] {
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    bundle.image.save_png(&paths.image)?;
    bundle.parse.save(&paths.parse)?;
    bundle.densepose.save(&paths.densepose)?;
    std::fs::write(&paths.keypoints, bundle.keypoints.to_openpose_json()).map_err(|e| Error::io(&paths.keypoints, e))
}

/// The try-on of `cloth`'s garment on `model`'s body.
pub fn tryon_spec(model: &PersonSpec, cloth: &PersonSpec) -> PersonSpec {
    PersonSpec { garment: cloth.garment, ..*model }
}

/// A synthetic dataset: `n` real samples plus one generated try-on per
/// ordered pair. Generated images are exact renderings, so every self-pair
/// reproduces its real sample.
pub struct SynthDataset {
    pub layout: DatasetLayout,
    pub ids: Vec<String>,
    pub specs: Vec<PersonSpec>,
    pub manifest: Manifest,
}

pub fn write_dataset(root: &Path, n: usize, width: usize, height: usize, seed: u64) -> Result<SynthDataset> {
    let ids: Vec<String> = (0..n).map(|i| format!("{:05}_00", i + 1)).collect();
    let specs: Vec<PersonSpec> = (0..n).map(|i| random_spec(seed.wrapping_mul(1000).wrapping_add(i as u64), width, height)).collect();
    let layout = DatasetLayout::new(root);
    for (id, spec) in ids.iter().zip(&specs) {
        write_bundle(&render(id, spec), &layout.real_paths(id))?;
    }
    let manifest = gen_cross_manifest(&ids)?;
    for pair in &manifest.entries {
        write_generated(&layout, &ids, &specs, pair, |s| s)?;
    }
    Ok(SynthDataset { layout, ids, specs, manifest })
}

/// Writes the generated sample for `pair`, passing its spec through `tweak`.
pub fn write_generated(
    layout: &DatasetLayout,
    ids: &[String],
    specs: &[PersonSpec],
    pair: &Pair,
    tweak: impl Fn(PersonSpec) -> PersonSpec,
) -> Result<()> {
    let find = |id: &str| ids.iter().position(|i| i == id).ok_or(Error::EmptyPool("unknown id"));
    let (m, c) = (find(&pair.model_id)?, find(&pair.clothing_id)?);
    let spec = tweak(tryon_spec(&specs[m], &specs[c]));
    let stem = DatasetLayout::generated_stem(pair);
    let paths = BundlePaths { keypoints: layout.generated_keypoints_path(pair), ..layout.generated_paths(pair) };
    write_bundle(&render(&stem, &spec), &paths)
}
