//! Adaptive try-on mask construction.
//!
//! A sample's wearing style is decided in two steps. Five waist checkpoints
//! (the three hip keypoints plus a midpoint on each side) are looked up in
//! the top garment's parsing region; when more than `tau_b` of them are
//! covered the top hangs over the bottom and the style is
//! [`WearingStyle::NonInterfered`]. Otherwise the aspect ratio of the
//! garment's torso part decides: short garments (ratio ≥ `tau_t`) are also
//! non-interfered, long ones are tucked in and therefore
//! [`WearingStyle::Interfered`].
//!
//! Interfered samples keep every bottom-garment pixel out of the mask.
//! Non-interfered samples may have the mask's lower boundary pushed down into
//! the bottom garment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotations::{AnnotationBundle, Joint, Keypoints, LabelMap, RgbImage, Role};
use crate::error::{Error, Result};
use crate::geometry::{convex_hull, in_convex, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WearingStyle {
    Interfered,
    NonInterfered,
}

impl std::fmt::Display for WearingStyle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WearingStyle::Interfered => "Interfered",
            WearingStyle::NonInterfered => "NonInterfered",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskParams {
    /// Checkpoint count above which the top is taken to cover the bottom.
    pub tau_b: u8,
    /// Torso aspect ratio at or above which the garment counts as short.
    pub tau_t: f64,
    /// Probability of using the adaptive mask for a non-interfered sample.
    pub p: f64,
    /// Range of the downward extension, as fractions of torso height.
    pub extend_frac_range: (f64, f64),
    pub dilation_radius: u32,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self { tau_b: 3, tau_t: 0.65, p: 0.5, extend_frac_range: (0.15, 0.35), dilation_radius: 5 }
    }
}

impl MaskParams {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.extend_frac_range;
        let bad = if self.tau_b > 5 {
            Some("tau_b must be in 0..=5")
        } else if self.tau_t.is_nan() || self.tau_t <= 0.0 {
            Some("tau_t must be positive")
        } else if !(0.0..=1.0).contains(&self.p) {
            Some("p must be in [0, 1]")
        } else if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            Some("extend_frac_range must satisfy 0 <= low <= high")
        } else {
            None
        };
        bad.map_or(Ok(()), |m| Err(Error::InvalidParams(m.into())))
    }
}

/// The five waist checkpoints, right to left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSet {
    pub points: [Point<f64>; 5],
    pub valid: [bool; 5],
}

/// Right hip, midpoint, mid hip, midpoint, left hip.
pub fn waist_checkpoints(kp: &Keypoints) -> Result<CheckpointSet> {
    let r = kp.position(Joint::RHip).ok_or(Error::MissingWaistKeypoint("RHip"))?;
    let m = kp.position(Joint::MidHip).ok_or(Error::MissingWaistKeypoint("MidHip"))?;
    let l = kp.position(Joint::LHip).ok_or(Error::MissingWaistKeypoint("LHip"))?;
    Ok(CheckpointSet { points: [r, r.midpoint(m), m, m.midpoint(l), l], valid: [true; 5] })
}

pub fn count_checkpoints_in_top(cps: &CheckpointSet, parse: &LabelMap) -> u8 {
    let (w, h) = parse.dims();
    cps.points
        .iter()
        .zip(cps.valid)
        .filter(|(p, valid)| {
            let (x, y) = p.pixel_clamped(w, h);
            *valid && parse.has_role(x, y, Role::UpperClothes)
        })
        .count() as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorsoRatio(pub f64);

fn shoulders(kp: &Keypoints) -> Result<(Point<f64>, Point<f64>)> {
    let r = kp.position(Joint::RShoulder).ok_or(Error::MissingShoulderKeypoint("RShoulder"))?;
    let l = kp.position(Joint::LShoulder).ok_or(Error::MissingShoulderKeypoint("LShoulder"))?;
    Ok((r, l))
}

fn hips(kp: &Keypoints) -> Result<(Point<f64>, Point<f64>)> {
    let r = kp.position(Joint::RHip).ok_or(Error::MissingWaistKeypoint("RHip"))?;
    let l = kp.position(Joint::LHip).ok_or(Error::MissingWaistKeypoint("LHip"))?;
    Ok((r, l))
}

/// Width over height of the bounding box of top-garment pixels lying in the
/// column band between the two shoulders. Both extents are pixel-inclusive.
pub fn torso_aspect_ratio(parse: &LabelMap, kp: &Keypoints) -> Result<TorsoRatio> {
    let (rs, ls) = shoulders(kp)?;
    let (w, h) = parse.dims();
    let x0 = rs.x.min(ls.x).round().max(0.0) as usize;
    let x1 = (rs.x.max(ls.x).round() as usize).min(w - 1);
    let top = parse.role_ids(Role::UpperClothes);
    let mut bbox: Option<(usize, usize, usize, usize)> = None;
    for y in 0..h {
        for x in x0..=x1 {
            if top.contains(parse.get(x, y)) {
                bbox = Some(match bbox {
                    None => (x, x, y, y),
                    Some((a, b, c, d)) => (a.min(x), b.max(x), c.min(y), d.max(y)),
                });
            }
        }
    }
    let (xmin, xmax, ymin, ymax) = bbox.ok_or(Error::EmptyTorsoRegion)?;
    Ok(TorsoRatio((xmax - xmin + 1) as f64 / (ymax - ymin + 1) as f64))
}

pub fn classify_wearing_style(count: u8, ratio: Option<TorsoRatio>, params: &MaskParams) -> WearingStyle {
    if count > params.tau_b {
        return WearingStyle::NonInterfered;
    }
    match ratio {
        Some(TorsoRatio(r)) if r >= params.tau_t => WearingStyle::NonInterfered,
        _ => WearingStyle::Interfered,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StyleDecision {
    pub style: WearingStyle,
    pub checkpoints_in_top: u8,
    pub torso_ratio: Option<TorsoRatio>,
}

/// Runs both classification steps on a bundle. A torso ratio that cannot be
/// measured counts as undefined.
pub fn determine_style(bundle: &AnnotationBundle, params: &MaskParams) -> Result<StyleDecision> {
    let cps = waist_checkpoints(&bundle.keypoints)?;
    let count = count_checkpoints_in_top(&cps, &bundle.parse);
    let ratio = torso_aspect_ratio(&bundle.parse, &bundle.keypoints).ok();
    Ok(StyleDecision { style: classify_wearing_style(count, ratio, params), checkpoints_in_top: count, torso_ratio: ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub tau_t: f64,
    pub used: usize,
    pub skipped: usize,
}

/// Mean torso aspect ratio over the bundles where it is defined.
pub fn calibrate_tau_t<'a>(bundles: impl IntoIterator<Item = &'a AnnotationBundle>) -> Result<Calibration> {
    let (mut sum, mut used, mut skipped) = (0.0, 0usize, 0usize);
    for b in bundles {
        match torso_aspect_ratio(&b.parse, &b.keypoints) {
            Ok(TorsoRatio(r)) => {
                sum += r;
                used += 1;
            }
            Err(_) => skipped += 1,
        }
    }
    if used == 0 {
        return Err(Error::NoValidSamples { skipped });
    }
    Ok(Calibration { tau_t: sum / used as f64, used, skipped })
}

/// Binary mask; 1 marks pixels to inpaint.
#[derive(Clone, PartialEq, Eq)]
pub struct MaskSpec {
    width: usize,
    height: usize,
    mask: Vec<u8>,
}

impl std::fmt::Debug for MaskSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MaskSpec({}x{}, area {})", self.width, self.height, self.area())
    }
}

impl MaskSpec {
    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, mask: vec![0; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mask = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y) as u8).collect();
        Self { width, height, mask }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.mask
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.mask[y * self.width + x] = v as u8;
    }

    pub fn area(&self) -> u64 {
        self.mask.iter().filter(|&&m| m != 0).count() as u64
    }

    pub fn is_superset_of(&self, other: &MaskSpec) -> bool {
        self.dims() == other.dims() && self.mask.iter().zip(&other.mask).all(|(&a, &b)| a != 0 || b == 0)
    }

    /// Lowest masked row of a column, if any.
    pub fn lowest_row(&self, x: usize) -> Option<usize> {
        (0..self.height).rev().find(|&y| self.get(x, y))
    }

    /// 0/255 grayscale bytes.
    pub fn to_gray(&self) -> Vec<u8> {
        self.mask.iter().map(|&m| if m != 0 { 255 } else { 0 }).collect()
    }

    pub fn to_png_bytes(&self) -> Vec<u8> {
        crate::annotations::gray_png_bytes(self.width, self.height, &self.to_gray())
    }
}

fn role_mask(parse: &LabelMap, role: Role) -> MaskSpec {
    let ids = parse.role_ids(role);
    let (w, h) = parse.dims();
    MaskSpec::from_fn(w, h, |x, y| ids.contains(parse.get(x, y)))
}

/// Disk dilation: a pixel is set when some source pixel lies within
/// Euclidean distance `radius`.
fn dilate(src: &MaskSpec, radius: u32) -> MaskSpec {
    if radius == 0 {
        return src.clone();
    }
    let (w, h) = src.dims();
    let r = radius as i64;
    let offsets: Vec<(i64, i64)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter(|(dx, dy)| dx * dx + dy * dy <= r * r)
        .collect();
    let mut out = src.clone();
    for y in 0..h {
        for x in 0..w {
            if !src.get(x, y) {
                continue;
            }
            // Interior pixels add nothing new.
            let interior = x > 0 && y > 0 && x + 1 < w && y + 1 < h
                && src.get(x - 1, y) && src.get(x + 1, y) && src.get(x, y - 1) && src.get(x, y + 1);
            if interior {
                continue;
            }
            for &(dx, dy) in &offsets {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                    out.set(nx as usize, ny as usize, true);
                }
            }
        }
    }
    out
}

fn torso_quad_mask(kp: &Keypoints, w: usize, h: usize) -> Result<MaskSpec> {
    let (rs, ls) = shoulders(kp)?;
    let (rh, lh) = hips(kp)?;
    let hull = convex_hull(&[rs, ls, lh, rh]);
    Ok(MaskSpec::from_fn(w, h, |x, y| in_convex(&hull, Point::new(x as f64, y as f64))))
}

fn protected(parse: &LabelMap) -> MaskSpec {
    let face = parse.role_ids(Role::Face);
    let hair = parse.role_ids(Role::Hair);
    let (w, h) = parse.dims();
    MaskSpec::from_fn(w, h, |x, y| {
        let l = parse.get(x, y);
        face.contains(l) || hair.contains(l)
    })
}

/// Upper-body mask: dilated top ∪ arms ∪ shoulder-hip quadrilateral, minus
/// face and hair.
pub fn make_baseline_mask(bundle: &AnnotationBundle, params: &MaskParams) -> Result<MaskSpec> {
    bundle.ensure_consistent()?;
    let (w, h) = bundle.dims();
    let quad = torso_quad_mask(&bundle.keypoints, w, h)?;
    let top = dilate(&role_mask(&bundle.parse, Role::UpperClothes), params.dilation_radius);
    let arms = role_mask(&bundle.parse, Role::Arms);
    let keep = protected(&bundle.parse);
    Ok(MaskSpec::from_fn(w, h, |x, y| (top.get(x, y) || arms.get(x, y) || quad.get(x, y)) && !keep.get(x, y)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveMeta {
    pub style: WearingStyle,
    /// Extension distance in pixels (non-interfered only).
    pub delta: Option<u32>,
    pub extend_frac: Option<f64>,
    pub seed: u64,
    /// Bottom-garment pixels below the extended boundary are left unmasked.
    pub lower_clothes_below_preserved: bool,
}

fn torso_height(kp: &Keypoints) -> Result<f64> {
    let (rs, ls) = shoulders(kp)?;
    let (rh, lh) = hips(kp)?;
    Ok(((rs.y + ls.y) / 2.0 - (rh.y + lh.y) / 2.0).abs())
}

fn adaptive_from_baseline(
    bundle: &AnnotationBundle,
    baseline: &MaskSpec,
    style: WearingStyle,
    params: &MaskParams,
    rng: &mut ChaCha8Rng,
    seed: u64,
) -> Result<(MaskSpec, AdaptiveMeta)> {
    let (w, h) = bundle.dims();
    let mut mask = baseline.clone();
    match style {
        WearingStyle::Interfered => {
            let lower = role_mask(&bundle.parse, Role::LowerClothes);
            for y in 0..h {
                for x in 0..w {
                    if lower.get(x, y) {
                        mask.set(x, y, false);
                    }
                }
            }
            Ok((mask, AdaptiveMeta { style, delta: None, extend_frac: None, seed, lower_clothes_below_preserved: true }))
        }
        WearingStyle::NonInterfered => {
            let (lo, hi) = params.extend_frac_range;
            let frac = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            let delta = (frac * torso_height(&bundle.keypoints)?).round() as usize;
            let keep = protected(&bundle.parse);
            for x in 0..w {
                if let Some(bottom) = baseline.lowest_row(x) {
                    for y in bottom + 1..=(bottom + delta).min(h - 1) {
                        if !keep.get(x, y) {
                            mask.set(x, y, true);
                        }
                    }
                }
            }
            let meta = AdaptiveMeta {
                style,
                delta: Some(delta as u32),
                extend_frac: Some(frac),
                seed,
                lower_clothes_below_preserved: true,
            };
            Ok((mask, meta))
        }
    }
}

pub fn make_adaptive_mask(
    bundle: &AnnotationBundle,
    style: WearingStyle,
    params: &MaskParams,
    seed: u64,
) -> Result<(MaskSpec, AdaptiveMeta)> {
    params.validate()?;
    let baseline = make_baseline_mask(bundle, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    adaptive_from_baseline(bundle, &baseline, style, params, &mut rng, seed)
}

/// Person image with the masked region painted over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgnosticImage(pub RgbImage);

pub const DEFAULT_FILL: [u8; 3] = [128, 128, 128];

pub fn apply_mask(image: &RgbImage, mask: &MaskSpec, fill: [u8; 3]) -> Result<AgnosticImage> {
    if image.dims() != mask.dims() {
        return Err(Error::dims("mask", image.dims(), mask.dims()));
    }
    let mut out = image.clone();
    let (w, h) = image.dims();
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                out.put(x, y, fill);
            }
        }
    }
    Ok(AgnosticImage(out))
}

#[derive(Debug, Clone)]
pub struct TrainingMask {
    pub mask: MaskSpec,
    pub agnostic: AgnosticImage,
    pub style: WearingStyle,
    pub used_adaptive: bool,
    pub meta: Option<AdaptiveMeta>,
}

/// Picks the training mask for one sample: interfered samples always get the
/// bottom-preserving mask, non-interfered ones the adaptive mask with
/// probability `p` and the baseline otherwise.
pub fn choose_training_mask(
    bundle: &AnnotationBundle,
    params: &MaskParams,
    fill: [u8; 3],
    seed: u64,
) -> Result<TrainingMask> {
    params.validate()?;
    let style = determine_style(bundle, params)?.style;
    choose_training_mask_with_style(bundle, style, params, fill, seed)
}

pub fn choose_training_mask_with_style(
    bundle: &AnnotationBundle,
    style: WearingStyle,
    params: &MaskParams,
    fill: [u8; 3],
    seed: u64,
) -> Result<TrainingMask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let use_adaptive = match style {
        WearingStyle::Interfered => true,
        WearingStyle::NonInterfered => rng.random_bool(params.p),
    };
    let baseline = make_baseline_mask(bundle, params)?;
    let (mask, meta) = if use_adaptive {
        let (m, meta) = adaptive_from_baseline(bundle, &baseline, style, params, &mut rng, seed)?;
        (m, Some(meta))
    } else {
        (baseline, None)
    };
    let agnostic = apply_mask(&bundle.image, &mask, fill)?;
    Ok(TrainingMask {
        mask,
        agnostic,
        style,
        used_adaptive: style == WearingStyle::NonInterfered && use_adaptive,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::annotations::{default_upper_body_parts, DenseposeMap, LabelSchema};

    fn kp_with(points: &[(Joint, f64, f64)], w: usize, h: usize) -> Keypoints {
        let mut flat = vec![0.0; 75];
        for &(j, x, y) in points {
            let i = j as usize * 3;
            flat[i..i + 3].copy_from_slice(&[x, y, 1.0]);
        }
        Keypoints::from_flat(&flat, w, h).unwrap()
    }

    fn schema() -> Arc<LabelSchema> {
        Arc::new(LabelSchema::default())
    }

    #[test]
    fn checkpoints_are_hips_and_midpoints() {
        let kp = kp_with(&[(Joint::RHip, 100.0, 300.0), (Joint::MidHip, 150.0, 300.0), (Joint::LHip, 200.0, 300.0)], 384, 512);
        let cps = waist_checkpoints(&kp).unwrap();
        let xs: Vec<f64> = cps.points.iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![100.0, 125.0, 150.0, 175.0, 200.0]);
        assert!(cps.points.iter().all(|p| p.y == 300.0));
    }

    #[test]
    fn coincident_hips_give_coincident_checkpoints() {
        let kp = kp_with(&[(Joint::RHip, 150.0, 300.0), (Joint::MidHip, 150.0, 300.0), (Joint::LHip, 150.0, 300.0)], 384, 512);
        let cps = waist_checkpoints(&kp).unwrap();
        assert!(cps.points.iter().all(|p| *p == Point::new(150.0, 300.0)));
    }

    #[test]
    fn missing_midhip_is_an_error() {
        let kp = kp_with(&[(Joint::RHip, 100.0, 300.0), (Joint::LHip, 200.0, 300.0)], 384, 512);
        assert!(matches!(waist_checkpoints(&kp), Err(Error::MissingWaistKeypoint("MidHip"))));
    }

    #[test]
    fn checkpoint_counts() {
        let kp = kp_with(&[(Joint::RHip, 2.0, 5.0), (Joint::MidHip, 6.0, 5.0), (Joint::LHip, 10.0, 5.0)], 12, 10);
        let cps = waist_checkpoints(&kp).unwrap();
        assert_eq!(count_checkpoints_in_top(&cps, &LabelMap::filled(12, 10, 0, schema())), 0);
        assert_eq!(count_checkpoints_in_top(&cps, &LabelMap::filled(12, 10, 5, schema())), 5);
        // Checkpoints sit at x = 2, 4, 6, 8, 10; cover x in 3..=8 so that the
        // second, third and fourth land on the top.
        let mut labels = vec![0u8; 120];
        for x in 3..=8 {
            labels[5 * 12 + x] = 5;
        }
        let parse = LabelMap::new(12, 10, labels, schema()).unwrap();
        assert_eq!(count_checkpoints_in_top(&cps, &parse), 3);
    }

    #[test]
    fn torso_ratio_measures_band_bbox() {
        let (w, h) = (300, 260);
        let mut labels = vec![0u8; w * h];
        // 130 x 200 block of top between the shoulders, plus a sleeve outside
        // the band that must be ignored.
        for y in 30..230 {
            for x in 80..210 {
                labels[y * w + x] = 5;
            }
        }
        for y in 0..260 {
            labels[y * w + 10] = 5;
        }
        let parse = LabelMap::new(w, h, labels, schema()).unwrap();
        let kp = kp_with(&[(Joint::RShoulder, 60.0, 30.0), (Joint::LShoulder, 240.0, 30.0)], w, h);
        let r = torso_aspect_ratio(&parse, &kp).unwrap();
        assert!((r.0 - 0.65).abs() < 1e-12);
    }

    #[test]
    fn torso_ratio_square_and_empty() {
        let mut labels = vec![0u8; 400];
        for y in 5..15 {
            for x in 5..15 {
                labels[y * 20 + x] = 6;
            }
        }
        let parse = LabelMap::new(20, 20, labels, schema()).unwrap();
        let kp = kp_with(&[(Joint::RShoulder, 0.0, 5.0), (Joint::LShoulder, 19.0, 5.0)], 20, 20);
        assert_eq!(torso_aspect_ratio(&parse, &kp).unwrap().0, 1.0);
        let kp = kp_with(&[(Joint::RShoulder, 16.0, 5.0), (Joint::LShoulder, 19.0, 5.0)], 20, 20);
        assert!(matches!(torso_aspect_ratio(&parse, &kp), Err(Error::EmptyTorsoRegion)));
        let kp = kp_with(&[(Joint::RShoulder, 16.0, 5.0)], 20, 20);
        assert!(matches!(torso_aspect_ratio(&parse, &kp), Err(Error::MissingShoulderKeypoint(_))));
    }

    #[test]
    fn classification_cases() {
        let p = MaskParams::default();
        assert_eq!(classify_wearing_style(4, None, &p), WearingStyle::NonInterfered);
        assert_eq!(classify_wearing_style(4, Some(TorsoRatio(0.1)), &p), WearingStyle::NonInterfered);
        assert_eq!(classify_wearing_style(2, Some(TorsoRatio(0.80)), &p), WearingStyle::NonInterfered);
        assert_eq!(classify_wearing_style(2, Some(TorsoRatio(0.50)), &p), WearingStyle::Interfered);
        assert_eq!(classify_wearing_style(3, Some(TorsoRatio(0.65)), &p), WearingStyle::NonInterfered);
        assert_eq!(classify_wearing_style(3, None, &p), WearingStyle::Interfered);
    }

    #[test]
    fn params_validation() {
        assert!(MaskParams::default().validate().is_ok());
        assert!(MaskParams { tau_b: 6, ..Default::default() }.validate().is_err());
        assert!(MaskParams { p: 1.5, ..Default::default() }.validate().is_err());
        assert!(MaskParams { tau_t: 0.0, ..Default::default() }.validate().is_err());
        assert!(MaskParams { extend_frac_range: (0.4, 0.2), ..Default::default() }.validate().is_err());
    }

    fn bundle_from(parse: LabelMap, kp: Keypoints) -> AnnotationBundle {
        let (w, h) = parse.dims();
        AnnotationBundle {
            sample_id: "t".into(),
            image: RgbImage::filled(w, h, [10, 20, 30]),
            keypoints: kp,
            densepose: DenseposeMap::filled(w, h, 0, default_upper_body_parts()),
            parse,
        }
    }

    fn torso_kp(w: usize, h: usize) -> Keypoints {
        kp_with(
            &[
                (Joint::RShoulder, 4.0, 4.0),
                (Joint::LShoulder, 15.0, 4.0),
                (Joint::RHip, 5.0, 14.0),
                (Joint::MidHip, 9.5, 14.0),
                (Joint::LHip, 14.0, 14.0),
            ],
            w,
            h,
        )
    }

    #[test]
    fn background_parse_gives_quad_only() {
        let (w, h) = (20, 24);
        let parse = LabelMap::filled(w, h, 0, schema());
        let kp = torso_kp(w, h);
        let mask = make_baseline_mask(&bundle_from(parse, kp.clone()), &MaskParams::default()).unwrap();
        let hull = convex_hull(&[
            kp.position(Joint::RShoulder).unwrap(),
            kp.position(Joint::LShoulder).unwrap(),
            kp.position(Joint::LHip).unwrap(),
            kp.position(Joint::RHip).unwrap(),
        ]);
        let oracle = MaskSpec::from_fn(w, h, |x, y| in_convex(&hull, Point::new(x as f64, y as f64)));
        assert_eq!(mask, oracle);
        assert!(mask.get(4, 4) && mask.get(14, 14) && !mask.get(4, 14) && !mask.get(9, 15));
    }

    #[test]
    fn face_on_quad_is_unmasked() {
        let (w, h) = (20, 24);
        let mut labels = vec![0u8; w * h];
        for x in 8..12 {
            labels[5 * w + x] = 13;
        }
        let parse = LabelMap::new(w, h, labels, schema()).unwrap();
        let mask = make_baseline_mask(&bundle_from(parse, torso_kp(w, h)), &MaskParams::default()).unwrap();
        assert!((8..12).all(|x| !mask.get(x, 5)));
        assert!(mask.get(7, 5));
    }

    #[test]
    fn interfered_removes_lower_clothes() {
        let (w, h) = (20, 24);
        let mut labels = vec![0u8; w * h];
        // 40 lower-clothes pixels at rows 11..=14, cols 5..=14, all inside the
        // shoulder-hip quad, plus a top above.
        for y in 11..15 {
            for x in 5..15 {
                labels[y * w + x] = 9;
            }
        }
        for y in 5..11 {
            for x in 6..13 {
                labels[y * w + x] = 5;
            }
        }
        let parse = LabelMap::new(w, h, labels, schema()).unwrap();
        let b = bundle_from(parse, torso_kp(w, h));
        let params = MaskParams::default();
        let base = make_baseline_mask(&b, &params).unwrap();
        let lower_in_base = (11..15).flat_map(|y| (5..15).map(move |x| (x, y))).filter(|&(x, y)| base.get(x, y)).count();
        assert_eq!(lower_in_base, 40);
        let (m, meta) = make_adaptive_mask(&b, WearingStyle::Interfered, &params, 1).unwrap();
        assert_eq!(m.area(), base.area() - 40);
        assert!(meta.delta.is_none());
    }

    #[test]
    fn zero_extension_is_identity() {
        let (w, h) = (20, 24);
        let b = bundle_from(LabelMap::filled(w, h, 0, schema()), torso_kp(w, h));
        let params = MaskParams { extend_frac_range: (0.0, 0.0), ..Default::default() };
        let base = make_baseline_mask(&b, &params).unwrap();
        let (m, meta) = make_adaptive_mask(&b, WearingStyle::NonInterfered, &params, 9).unwrap();
        assert_eq!(m, base);
        assert_eq!(meta.delta, Some(0));
    }

    #[test]
    fn extension_grows_downward_and_is_seeded() {
        let (w, h) = (20, 24);
        let b = bundle_from(LabelMap::filled(w, h, 0, schema()), torso_kp(w, h));
        let params = MaskParams { extend_frac_range: (0.3, 0.3), ..Default::default() };
        let base = make_baseline_mask(&b, &params).unwrap();
        let (m, meta) = make_adaptive_mask(&b, WearingStyle::NonInterfered, &params, 3).unwrap();
        // torso height 10, 0.3 -> 3 rows
        assert_eq!(meta.delta, Some(3));
        assert!(m.is_superset_of(&base));
        for x in 0..w {
            if let Some(yb) = base.lowest_row(x) {
                assert_eq!(m.lowest_row(x), Some((yb + 3).min(h - 1)));
            }
        }
        let again = make_adaptive_mask(&b, WearingStyle::NonInterfered, &params, 3).unwrap().0;
        assert_eq!(m.to_png_bytes(), again.to_png_bytes());
    }

    #[test]
    fn apply_mask_cases() {
        let img = RgbImage::new(2, 2, (0..12).collect()).unwrap();
        let none = MaskSpec::empty(2, 2);
        assert_eq!(apply_mask(&img, &none, DEFAULT_FILL).unwrap().0, img);
        let all = MaskSpec::from_fn(2, 2, |_, _| true);
        assert_eq!(apply_mask(&img, &all, [1, 2, 3]).unwrap().0, RgbImage::filled(2, 2, [1, 2, 3]));
        let checker = MaskSpec::from_fn(2, 2, |x, y| (x + y) % 2 == 0);
        let out = apply_mask(&img, &checker, [9, 9, 9]).unwrap().0;
        assert_eq!(out.pixels(), &[9, 9, 9, 3, 4, 5, 6, 7, 8, 9, 9, 9]);
        assert!(apply_mask(&img, &MaskSpec::empty(3, 2), DEFAULT_FILL).is_err());
    }

    #[test]
    fn training_mask_probability_extremes() {
        let (w, h) = (20, 24);
        let b = bundle_from(LabelMap::filled(w, h, 0, schema()), torso_kp(w, h));
        for seed in 0..20 {
            let never = MaskParams { p: 0.0, ..Default::default() };
            let t = choose_training_mask_with_style(&b, WearingStyle::NonInterfered, &never, DEFAULT_FILL, seed).unwrap();
            assert!(!t.used_adaptive);
            let always = MaskParams { p: 1.0, ..Default::default() };
            let t = choose_training_mask_with_style(&b, WearingStyle::NonInterfered, &always, DEFAULT_FILL, seed).unwrap();
            assert!(t.used_adaptive);
            let t = choose_training_mask_with_style(&b, WearingStyle::Interfered, &never, DEFAULT_FILL, seed).unwrap();
            assert!(!t.used_adaptive);
            assert_eq!(t.meta.unwrap().style, WearingStyle::Interfered);
        }
    }
}
