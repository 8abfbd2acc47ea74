//! Exact pixel counting over label and part maps.

use super::densepose::DenseposeMap;
use super::labels::{LabelMap, LabelSet, Role};
use crate::error::{Error, Result};

/// What to count in an index map.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    /// A parsing role; only meaningful for [`LabelMap`].
    Role(Role),
    /// A role given by name, resolved at count time.
    Named(String),
    /// The map's configured upper-body part set; only meaningful for
    /// [`DenseposeMap`].
    UpperBody,
    /// Explicit ids.
    Ids(LabelSet),
}

impl From<Role> for Selector {
    fn from(r: Role) -> Self {
        Selector::Role(r)
    }
}

impl From<LabelSet> for Selector {
    fn from(s: LabelSet) -> Self {
        Selector::Ids(s)
    }
}

/// A row-major 8-bit index raster.
pub trait IndexMap {
    fn dims(&self) -> (usize, usize);
    fn values(&self) -> &[u8];
    fn resolve(&self, selector: &Selector) -> Result<LabelSet>;
}

impl IndexMap for LabelMap {
    fn dims(&self) -> (usize, usize) {
        LabelMap::dims(self)
    }

    fn values(&self) -> &[u8] {
        self.labels()
    }

    fn resolve(&self, selector: &Selector) -> Result<LabelSet> {
        match selector {
            Selector::Role(r) => Ok(self.role_ids(*r)),
            Selector::Named(name) => Ok(self.role_ids(name.parse()?)),
            Selector::UpperBody => Err(Error::UnknownRole("upper_body (densepose only)".into())),
            Selector::Ids(s) => Ok(*s),
        }
    }
}

impl IndexMap for DenseposeMap {
    fn dims(&self) -> (usize, usize) {
        DenseposeMap::dims(self)
    }

    fn values(&self) -> &[u8] {
        self.parts()
    }

    fn resolve(&self, selector: &Selector) -> Result<LabelSet> {
        match selector {
            Selector::UpperBody => Ok(*self.upper_body_parts()),
            Selector::Ids(s) => Ok(*s),
            Selector::Named(name) if name == "upper_body" => Ok(*self.upper_body_parts()),
            Selector::Named(name) => Err(Error::UnknownRole(name.clone())),
            Selector::Role(r) => Err(Error::UnknownRole(format!("{r} (parsing maps only)"))),
        }
    }
}

pub fn region_area<M: IndexMap + ?Sized>(map: &M, selector: &Selector) -> Result<u64> {
    let ids = map.resolve(selector)?;
    Ok(count_in(map.values(), &ids))
}

fn count_in(values: &[u8], ids: &LabelSet) -> u64 {
    if ids.is_empty() {
        return 0;
    }
    values.iter().filter(|&&v| ids.contains(v)).count() as u64
}

/// Pixels selected in both a parsing map and a densepose map.
pub fn region_intersection_area(
    parse: &LabelMap,
    parse_sel: &Selector,
    densepose: &DenseposeMap,
    parts_sel: &Selector,
) -> Result<u64> {
    if parse.dims() != densepose.dims() {
        return Err(Error::dims("densepose map", parse.dims(), densepose.dims()));
    }
    let a = parse.resolve(parse_sel)?;
    let b = densepose.resolve(parts_sel)?;
    Ok(parse
        .labels()
        .iter()
        .zip(densepose.parts())
        .filter(|(&l, &p)| a.contains(l) && b.contains(p))
        .count() as u64)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::annotations::densepose::default_upper_body_parts;
    use crate::annotations::labels::LabelSchema;

    fn schema() -> Arc<LabelSchema> {
        Arc::new(LabelSchema::default())
    }

    #[test]
    fn empty_selector_counts_zero() {
        let m = LabelMap::filled(4, 4, 5, schema());
        assert_eq!(region_area(&m, &Selector::Ids(LabelSet::EMPTY)).unwrap(), 0);
    }

    #[test]
    fn five_upper_pixels_on_4x4() {
        let mut labels = vec![0u8; 16];
        for i in [0, 3, 6, 9, 15] {
            labels[i] = 5;
        }
        let m = LabelMap::new(4, 4, labels, schema()).unwrap();
        assert_eq!(region_area(&m, &Role::UpperClothes.into()).unwrap(), 5);
        assert_eq!(region_area(&m, &Role::Background.into()).unwrap(), 11);
    }

    #[test]
    fn full_grid_single_label() {
        let m = LabelMap::filled(7, 3, 13, schema());
        assert_eq!(region_area(&m, &Role::Face.into()).unwrap(), 21);
    }

    #[test]
    fn role_on_densepose_is_unknown() {
        let d = DenseposeMap::filled(2, 2, 1, default_upper_body_parts());
        assert!(matches!(region_area(&d, &Role::Face.into()), Err(Error::UnknownRole(_))));
        assert!(matches!(region_area(&d, &Selector::Named("nope".into())), Err(Error::UnknownRole(_))));
        assert_eq!(region_area(&d, &Selector::UpperBody).unwrap(), 4);
    }

    #[test]
    fn intersection_dimension_mismatch() {
        let m = LabelMap::filled(4, 4, 5, schema());
        let d = DenseposeMap::filled(4, 3, 1, default_upper_body_parts());
        let err = region_intersection_area(&m, &Role::UpperClothes.into(), &d, &Selector::UpperBody);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn intersection_disjoint_and_identical() {
        let m = LabelMap::filled(4, 4, 5, schema());
        let d0 = DenseposeMap::filled(4, 4, 0, default_upper_body_parts());
        let d1 = DenseposeMap::filled(4, 4, 2, default_upper_body_parts());
        let up = Selector::Role(Role::UpperClothes);
        assert_eq!(region_intersection_area(&m, &up, &d0, &Selector::UpperBody).unwrap(), 0);
        assert_eq!(region_intersection_area(&m, &up, &d1, &Selector::UpperBody).unwrap(), 16);
    }
}
