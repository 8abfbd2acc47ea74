use std::path::Path;

use super::labels::LabelSet;
use super::raster;
use crate::error::{Error, Result};

pub const MAX_PART: u8 = 24;

/// Torso front/back in the 24-part DensePose convention.
pub const TORSO_PARTS: [u8; 2] = [1, 2];
/// Upper and lower arms, inside and outside.
pub const ARM_PARTS: [u8; 8] = [15, 16, 17, 18, 19, 20, 21, 22];

pub fn default_upper_body_parts() -> LabelSet {
    TORSO_PARTS.into_iter().chain(ARM_PARTS).collect()
}

/// Per-pixel DensePose part index (0 = background).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseposeMap {
    width: usize,
    height: usize,
    parts: Vec<u8>,
    upper_body_parts: LabelSet,
}

impl DenseposeMap {
    pub fn new(width: usize, height: usize, parts: Vec<u8>, upper_body_parts: LabelSet) -> Result<Self> {
        if width == 0 || height == 0 || parts.len() != width * height {
            return Err(Error::InvalidParams(format!(
                "part grid of {} values does not match {width}x{height}",
                parts.len()
            )));
        }
        if upper_body_parts.contains(0) {
            return Err(Error::InvalidParams("upper-body part set must exclude background (0)".into()));
        }
        if let Some(bad) = upper_body_parts.max().filter(|&m| m > MAX_PART) {
            return Err(Error::InvalidParams(format!("upper-body part {bad} exceeds {MAX_PART}")));
        }
        if let Some(&value) = parts.iter().find(|&&p| p > MAX_PART) {
            return Err(Error::PartIndexOutOfRange { path: "<grid>".into(), value });
        }
        Ok(Self { width, height, parts, upper_body_parts })
    }

    pub fn filled(width: usize, height: usize, part: u8, upper_body_parts: LabelSet) -> Self {
        Self::new(width, height, vec![part; width * height], upper_body_parts).expect("consistent grid")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn parts(&self) -> &[u8] {
        &self.parts
    }

    pub fn upper_body_parts(&self) -> &LabelSet {
        &self.upper_body_parts
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.parts[y * self.width + x]
    }

    pub fn foreground_area(&self) -> u64 {
        self.parts.iter().filter(|&&p| p != 0).count() as u64
    }

    pub fn to_png_bytes(&self) -> Vec<u8> {
        raster::gray_png_bytes(self.width, self.height, &self.parts)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        raster::save_gray_png(path, self.width, self.height, &self.parts)
    }
}

/// Loads an 8-bit DensePose part-index PNG.
pub fn load_densepose(path: &Path, upper_body_parts: LabelSet) -> Result<DenseposeMap> {
    let grid = raster::read_index_png(path)?;
    if let Some(&value) = grid.values.iter().find(|&&p| p > MAX_PART) {
        return Err(Error::PartIndexOutOfRange { path: path.to_path_buf(), value });
    }
    DenseposeMap::new(grid.width, grid.height, grid.values, upper_body_parts)
        .map_err(|e| Error::malformed(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn background_in_part_set_rejected() {
        let parts = LabelSet::from_ids([0, 1]);
        assert!(DenseposeMap::new(1, 1, vec![0], parts).is_err());
    }

    #[test]
    fn out_of_range_grid_rejected() {
        let err = DenseposeMap::new(1, 1, vec![30], default_upper_body_parts()).err().unwrap();
        assert!(matches!(err, Error::PartIndexOutOfRange { value: 30, .. }));
    }

    #[test]
    fn default_parts() {
        let p = default_upper_body_parts();
        assert_eq!(p.len(), 10);
        assert!(p.contains(1) && p.contains(22) && !p.contains(3));
    }
}
