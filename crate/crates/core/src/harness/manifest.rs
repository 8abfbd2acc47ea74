use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One try-on: the person of `model_id` wearing the garment of `clothing_id`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    pub model_id: String,
    pub clothing_id: String,
}

impl Pair {
    pub fn new(model_id: impl Into<String>, clothing_id: impl Into<String>) -> Self {
        Self { model_id: model_id.into(), clothing_id: clothing_id.into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<Pair>,
}

fn duplicates<'a>(items: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut dup = BTreeSet::new();
    for s in items {
        if !seen.insert(s) {
            dup.insert(s.to_string());
        }
    }
    dup.into_iter().collect()
}

impl Manifest {
    /// Builds a manifest, rejecting repeated pairs.
    pub fn new(entries: Vec<Pair>) -> Result<Self> {
        let keys: Vec<String> = entries.iter().map(|p| format!("{},{}", p.model_id, p.clothing_id)).collect();
        let dup = duplicates(keys.iter().map(String::as_str));
        if !dup.is_empty() {
            return Err(Error::DuplicateIds(dup));
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| csv_err(path, e))?;
        let entries = rdr.deserialize::<Pair>().collect::<std::result::Result<Vec<_>, _>>().map_err(|e| csv_err(path, e))?;
        Self::new(entries)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file, path)
    }

    /// Writes the manifest to any sink; `label` names it in errors.
    pub fn write_csv_to(&self, sink: impl std::io::Write, label: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        if self.entries.is_empty() {
            w.write_record(["model_id", "clothing_id"]).map_err(|e| csv_err(label, e))?;
        }
        for p in &self.entries {
            w.serialize(p).map_err(|e| csv_err(label, e))?;
        }
        w.flush().map_err(|e| Error::io(label, e))
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::malformed(path, format!("{other:?}")),
    }
}

/// Every ordered pair over `ids`, row-major: all garments for the first
/// model, then the second model, and so on.
pub fn gen_cross_manifest<S: AsRef<str>>(ids: &[S]) -> Result<Manifest> {
    if ids.is_empty() {
        return Err(Error::EmptyPool("sample ids"));
    }
    let dup = duplicates(ids.iter().map(AsRef::as_ref));
    if !dup.is_empty() {
        return Err(Error::DuplicateIds(dup));
    }
    let entries = ids
        .iter()
        .flat_map(|m| ids.iter().map(move |c| Pair::new(m.as_ref(), c.as_ref())))
        .collect();
    Ok(Manifest { entries })
}

/// Reads one id per line, ignoring blank lines and `#` comments.
pub fn read_ids(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_ids_enumerate_row_major() {
        let m = gen_cross_manifest(&["a", "b"]).unwrap();
        let got: Vec<(&str, &str)> =
            m.entries.iter().map(|p| (p.model_id.as_str(), p.clothing_id.as_str())).collect();
        assert_eq!(got, vec![("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")]);
    }

    #[test]
    fn duplicates_are_named() {
        match gen_cross_manifest(&["x", "y", "x"]) {
            Err(Error::DuplicateIds(d)) => assert_eq!(d, vec!["x".to_string()]),
            other => panic!("{other:?}"),
        }
        assert!(matches!(gen_cross_manifest::<&str>(&[]), Err(Error::EmptyPool(_))));
        assert!(Manifest::new(vec![Pair::new("a", "b"), Pair::new("a", "b")]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = gen_cross_manifest(&["01", "02", "03"]).unwrap();
        m.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert!(text.starts_with("model_id,clothing_id\n01,01\n"));
        assert_eq!(Manifest::read_csv(&path).unwrap(), m);
    }
}
