//! Human-parsing label maps and the role schema that gives their ids meaning.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::raster::{self, IndexGrid};
use crate::error::{Error, Result};

/// A set of 8-bit label (or part) ids.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LabelSet([u64; 4]);

impl LabelSet {
    pub const EMPTY: LabelSet = LabelSet([0; 4]);

    pub fn from_ids(ids: impl IntoIterator<Item = u8>) -> Self {
        let mut s = Self::EMPTY;
        for id in ids {
            s.insert(id);
        }
        s
    }

    pub fn insert(&mut self, id: u8) {
        self.0[id as usize >> 6] |= 1 << (id & 63);
    }

    #[inline]
    pub fn contains(&self, id: u8) -> bool {
        self.0[id as usize >> 6] & (1 << (id & 63)) != 0
    }

    pub fn union(&self, other: &Self) -> Self {
        LabelSet(std::array::from_fn(|i| self.0[i] | other.0[i]))
    }

    pub fn intersection(&self, other: &Self) -> Self {
        LabelSet(std::array::from_fn(|i| self.0[i] & other.0[i]))
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.intersection(other).is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..=255u8).filter(move |&id| self.contains(id))
    }

    pub fn max(&self) -> Option<u8> {
        self.iter().last()
    }
}

impl fmt::Debug for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<u8> for LabelSet {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        Self::from_ids(iter)
    }
}

impl Serialize for LabelSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for LabelSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Vec::<u8>::deserialize(d)?.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    UpperClothes,
    LowerClothes,
    Dress,
    Face,
    Hair,
    Arms,
    Background,
    Other,
}

impl Role {
    pub const ALL: [Role; 8] = [
        Role::UpperClothes,
        Role::LowerClothes,
        Role::Dress,
        Role::Face,
        Role::Hair,
        Role::Arms,
        Role::Background,
        Role::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Role::UpperClothes => "upper_clothes",
            Role::LowerClothes => "lower_clothes",
            Role::Dress => "dress",
            Role::Face => "face",
            Role::Hair => "hair",
            Role::Arms => "arms",
            Role::Background => "background",
            Role::Other => "other",
        }
    }
}

impl FromStr for Role {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Role::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::UnknownRole(s.to_string()))
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps each [`Role`] to the label ids that carry it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSchema {
    pub upper_clothes: LabelSet,
    pub lower_clothes: LabelSet,
    pub dress: LabelSet,
    pub face: LabelSet,
    pub hair: LabelSet,
    pub arms: LabelSet,
    pub background: LabelSet,
    pub other: LabelSet,
}

impl Default for LabelSchema {
    /// CIHP/ATR-style ids: 5 upper-clothes, 6 dress, 7 coat are all treated
    /// as the top garment.
    fn default() -> Self {
        Self {
            upper_clothes: LabelSet::from_ids([5, 6, 7]),
            lower_clothes: LabelSet::from_ids([9, 12]),
            dress: LabelSet::EMPTY,
            face: LabelSet::from_ids([13]),
            hair: LabelSet::from_ids([2]),
            arms: LabelSet::from_ids([14, 15]),
            background: LabelSet::from_ids([0]),
            other: LabelSet::from_ids([1, 3, 4, 8, 10, 11, 16, 17, 18, 19]),
        }
    }
}

impl LabelSchema {
    /// Checks that role sets are pairwise disjoint.
    pub fn validate(&self) -> Result<()> {
        for (i, a) in Role::ALL.iter().enumerate() {
            for b in &Role::ALL[i + 1..] {
                let overlap = self.ids(*a).intersection(self.ids(*b));
                if !overlap.is_empty() {
                    return Err(Error::InvalidParams(format!(
                        "label ids {overlap:?} assigned to both {a} and {b}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn ids(&self, role: Role) -> &LabelSet {
        match role {
            Role::UpperClothes => &self.upper_clothes,
            Role::LowerClothes => &self.lower_clothes,
            Role::Dress => &self.dress,
            Role::Face => &self.face,
            Role::Hair => &self.hair,
            Role::Arms => &self.arms,
            Role::Background => &self.background,
            Role::Other => &self.other,
        }
    }

    pub fn ids_mut(&mut self, role: Role) -> &mut LabelSet {
        match role {
            Role::UpperClothes => &mut self.upper_clothes,
            Role::LowerClothes => &mut self.lower_clothes,
            Role::Dress => &mut self.dress,
            Role::Face => &mut self.face,
            Role::Hair => &mut self.hair,
            Role::Arms => &mut self.arms,
            Role::Background => &mut self.background,
            Role::Other => &mut self.other,
        }
    }

    /// Union of every role except `other`.
    pub fn known(&self) -> LabelSet {
        Role::ALL
            .iter()
            .filter(|r| **r != Role::Other)
            .fold(LabelSet::EMPTY, |acc, r| acc.union(self.ids(*r)))
    }

    pub fn role_of(&self, id: u8) -> Role {
        Role::ALL
            .into_iter()
            .find(|r| self.ids(*r).contains(id))
            .unwrap_or(Role::Other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelMapMeta {
    /// Pixels whose id is in no schema role; they count as `other`.
    pub unmapped_pixels: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u8>,
    schema: Arc<LabelSchema>,
    meta: LabelMapMeta,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u8>, schema: Arc<LabelSchema>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::InvalidParams(format!(
                "label grid of {} values does not match {width}x{height}",
                labels.len()
            )));
        }
        let mapped = schema.known().union(&schema.other);
        let unmapped_pixels = labels.iter().filter(|&&l| !mapped.contains(l)).count() as u64;
        Ok(Self { width, height, labels, schema, meta: LabelMapMeta { unmapped_pixels } })
    }

    pub fn filled(width: usize, height: usize, label: u8, schema: Arc<LabelSchema>) -> Self {
        Self::new(width, height, vec![label; width * height], schema).expect("consistent grid")
    }

    pub fn from_png_bytes(bytes: &[u8], schema: Arc<LabelSchema>) -> Result<Self> {
        let grid = raster::decode_index_png_bytes(bytes, Path::new("<memory>"))?;
        Self::from_grid(grid, schema, Path::new("<memory>"))
    }

    fn from_grid(grid: IndexGrid, schema: Arc<LabelSchema>, path: &Path) -> Result<Self> {
        let map = Self::new(grid.width, grid.height, grid.values, schema).map_err(|e| Error::malformed(path, e))?;
        if map.meta.unmapped_pixels > 0 {
            log::warn!(
                "{}: {} pixels carry ids outside the schema, treated as `other`",
                path.display(),
                map.meta.unmapped_pixels
            );
        }
        Ok(map)
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

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn schema(&self) -> &LabelSchema {
        &self.schema
    }

    pub fn meta(&self) -> LabelMapMeta {
        self.meta
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    pub fn has_role(&self, x: usize, y: usize, role: Role) -> bool {
        self.role_ids(role).contains(self.get(x, y))
    }

    /// Ids selected by a role. `other` also picks up ids the schema never
    /// mentions.
    pub fn role_ids(&self, role: Role) -> LabelSet {
        match role {
            Role::Other => {
                let known = self.schema.known();
                LabelSet(std::array::from_fn(|i| !known.0[i]))
            }
            r => *self.schema.ids(r),
        }
    }

    /// Encodes as an 8-bit grayscale PNG.
    pub fn to_png_bytes(&self) -> Vec<u8> {
        raster::gray_png_bytes(self.width, self.height, &self.labels)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        raster::save_gray_png(path, self.width, self.height, &self.labels)
    }
}

/// Loads a CIHP-style parsing map from an 8-bit grayscale or paletted PNG.
pub fn load_label_map(path: &Path, schema: Arc<LabelSchema>) -> Result<LabelMap> {
    let grid = raster::read_index_png(path)?;
    LabelMap::from_grid(grid, schema, path)
}
