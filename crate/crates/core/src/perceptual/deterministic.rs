//! Closed-form feature backend with no learned weights.
//!
//! Each of the five layers works on a 2×2 box-downsampled copy of the
//! previous one and emits 12 channels per location: an 8-bin soft histogram
//! of luminance-gradient orientations pooled over a 3×3 window, the three
//! color values, and a constant bias that keeps flat regions distinguishable
//! by color after normalization.

use std::f64::consts::PI;

use super::{BackendInfo, FeatureBackend, FeatureMap, Patch, NUM_LAYERS};
use crate::error::Result;
use crate::scalar::Real;

const BINS: usize = 8;
const CHANNELS: usize = BINS + 4;

/// Handcrafted gradient-orientation pyramid; exact and thread-safe.
#[derive(Debug, Clone, Copy, Default)]
pub struct GradientPyramid;

static INFO: std::sync::LazyLock<BackendInfo> = std::sync::LazyLock::new(|| BackendInfo {
    id: "deterministic-test".into(),
    channels: [CHANNELS; NUM_LAYERS],
    deterministic: true,
});

struct Rgb {
    w: usize,
    h: usize,
    /// Interleaved RGB in [0, 1].
    px: Vec<f64>,
}

impl Rgb {
    fn from_patch(p: &Patch) -> Self {
        Self { w: p.size.w, h: p.size.h, px: p.pixels.iter().map(|&v| v as f64 / 255.0).collect() }
    }

    fn at(&self, x: usize, y: usize, c: usize) -> f64 {
        self.px[(y * self.w + x) * 3 + c]
    }

    fn downsample(&self) -> Self {
        let (w, h) = ((self.w / 2).max(1), (self.h / 2).max(1));
        let mut px = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    let mut s = 0.0;
                    for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                        let sx = (2 * x + dx).min(self.w - 1);
                        let sy = (2 * y + dy).min(self.h - 1);
                        s += self.at(sx, sy, c);
                    }
                    px.push(s / 4.0);
                }
            }
        }
        Self { w, h, px }
    }

    fn luma(&self, x: usize, y: usize) -> f64 {
        0.299 * self.at(x, y, 0) + 0.587 * self.at(x, y, 1) + 0.114 * self.at(x, y, 2)
    }

    fn features<T: Real>(&self) -> FeatureMap<T> {
        let (w, h) = (self.w, self.h);
        let plane = w * h;
        // Per-pixel soft orientation histogram.
        let mut hist = vec![0.0f64; BINS * plane];
        for y in 0..h {
            for x in 0..w {
                let gx = (self.luma((x + 1).min(w - 1), y) - self.luma(x.saturating_sub(1), y)) / 2.0;
                let gy = (self.luma(x, (y + 1).min(h - 1)) - self.luma(x, y.saturating_sub(1))) / 2.0;
                let mag = (gx * gx + gy * gy).sqrt();
                if mag == 0.0 {
                    continue;
                }
                let pos = (gy.atan2(gx) + PI) / (2.0 * PI) * BINS as f64;
                let lo = pos.floor();
                let frac = pos - lo;
                let b0 = (lo as usize) % BINS;
                let b1 = (b0 + 1) % BINS;
                hist[b0 * plane + y * w + x] += mag * (1.0 - frac);
                hist[b1 * plane + y * w + x] += mag * frac;
            }
        }
        let mut out = FeatureMap::zeros(CHANNELS, h, w);
        for y in 0..h {
            for x in 0..w {
                let p = y * w + x;
                for b in 0..BINS {
                    let mut s = 0.0;
                    for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                        for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                            s += hist[b * plane + ny * w + nx];
                        }
                    }
                    out.data[b * plane + p] = T::lit(s);
                }
                for c in 0..3 {
                    out.data[(BINS + c) * plane + p] = T::lit(self.at(x, y, c));
                }
                out.data[(BINS + 3) * plane + p] = T::one();
            }
        }
        out
    }
}

impl<T: Real> FeatureBackend<T> for GradientPyramid {
    fn info(&self) -> &BackendInfo {
        &INFO
    }

    fn features(&self, patch: &Patch) -> Result<Vec<FeatureMap<T>>> {
        let mut level = Rgb::from_patch(patch).downsample();
        let mut maps = Vec::with_capacity(NUM_LAYERS);
        for i in 0..NUM_LAYERS {
            if i > 0 {
                level = level.downsample();
            }
            maps.push(level.features());
        }
        Ok(maps)
    }
}
