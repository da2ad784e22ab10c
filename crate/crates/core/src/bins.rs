//! Context bins and the CSV they are read from.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{ConceptId, KgError};

#[derive(Debug, Error)]
pub enum BinError {
    #[error("bin id `{0}` appears more than once")]
    DuplicateBinId(String),
    #[error("malformed bins CSV at line {line}: {reason}")]
    MalformedCsv { line: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bin {
    pub id: String,
    pub context: ConceptId,
}

/// Ordered, uniquely-named context bins.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BinRegistry {
    bins: Vec<Bin>,
}

impl BinRegistry {
    pub fn new(bins: Vec<Bin>) -> Result<Self, BinError> {
        let mut seen = HashSet::new();
        for b in &bins {
            if !seen.insert(b.id.as_str()) {
                return Err(BinError::DuplicateBinId(b.id.clone()));
            }
        }
        Ok(BinRegistry { bins })
    }

    /// One bin per context, with the bin id equal to the context label.
    pub fn from_contexts<I, S>(contexts: I) -> Result<Self, KgError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut bins = Vec::new();
        for c in contexts {
            let context = ConceptId::new(c.as_ref())?;
            if bins.iter().any(|b: &Bin| b.context == context) {
                continue;
            }
            bins.push(Bin {
                id: context.to_string(),
                context,
            });
        }
        Ok(BinRegistry { bins })
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Bin> {
        self.bins.iter()
    }

    pub fn get(&self, id: &str) -> Option<&Bin> {
        self.bins.iter().find(|b| b.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.bins.iter().map(|b| b.id.as_str())
    }

    /// Keeps the bins named in `focus`, in registry order. Returns the first
    /// id that is not registered as the error.
    pub fn restrict<S: AsRef<str>>(&self, focus: &[S]) -> Result<BinRegistry, String> {
        if let Some(missing) = focus.iter().find(|f| self.get(f.as_ref()).is_none()) {
            return Err(missing.as_ref().to_string());
        }
        Ok(BinRegistry {
            bins: self
                .bins
                .iter()
                .filter(|b| focus.iter().any(|f| f.as_ref() == b.id))
                .cloned()
                .collect(),
        })
    }
}

impl<'a> IntoIterator for &'a BinRegistry {
    type Item = &'a Bin;
    type IntoIter = std::slice::Iter<'a, Bin>;

    fn into_iter(self) -> Self::IntoIter {
        self.bins.iter()
    }
}

/// Reads a `bin_id,context` CSV. Contexts are normalized; order is kept.
pub fn read_bins<R: Read>(reader: R) -> Result<BinRegistry, BinError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(1, e))?.clone();
    if headers.len() != 2 || &headers[0] != "bin_id" || &headers[1] != "context" {
        return Err(BinError::MalformedCsv {
            line: 1,
            reason: "header must be `bin_id,context`".into(),
        });
    }
    let mut bins = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_error(line, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(BinError::MalformedCsv {
                line,
                reason: "empty bin_id".into(),
            });
        }
        let context = ConceptId::new(&rec[1]).map_err(|e| BinError::MalformedCsv {
            line,
            reason: e.to_string(),
        })?;
        bins.push(Bin { id, context });
    }
    BinRegistry::new(bins)
}

pub fn load_bins(path: &Path) -> Result<BinRegistry, BinError> {
    read_bins(std::fs::File::open(path)?)
}

fn csv_error(line: u64, e: csv::Error) -> BinError {
    BinError::MalformedCsv {
        line,
        reason: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_domestic_bins() {
        let reg = read_bins("bin_id,context\nkitchen,kitchen\ngarden,garden\npantry,pantry\ndining_room,Dining Room\n".as_bytes()).unwrap();
        assert_eq!(reg.len(), 4);
        assert_eq!(reg.ids().collect::<Vec<_>>(), ["kitchen", "garden", "pantry", "dining_room"]);
        assert_eq!(reg.get("dining_room").unwrap().context.as_str(), "dining_room");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = read_bins("bin_id,context\nk,kitchen\nk,pantry\n".as_bytes()).unwrap_err();
        assert!(matches!(err, BinError::DuplicateBinId(id) if id == "k"));
    }

    #[test]
    fn header_only_is_empty() {
        let reg = read_bins("bin_id,context\n".as_bytes()).unwrap();
        assert!(reg.is_empty());
    }

    #[test]
    fn malformed_rows() {
        assert!(matches!(
            read_bins("bin,ctx\na,b\n".as_bytes()),
            Err(BinError::MalformedCsv { line: 1, .. })
        ));
        assert!(matches!(
            read_bins("bin_id,context\na,b\nc\n".as_bytes()),
            Err(BinError::MalformedCsv { line: 3, .. })
        ));
        assert!(matches!(
            read_bins("bin_id,context\na,   \n".as_bytes()),
            Err(BinError::MalformedCsv { line: 2, .. })
        ));
    }

    #[test]
    fn restrict_keeps_registry_order() {
        let reg = BinRegistry::from_contexts(["kitchen", "living_room", "bedroom"]).unwrap();
        let sub = reg.restrict(&["bedroom", "kitchen"]).unwrap();
        assert_eq!(sub.ids().collect::<Vec<_>>(), ["kitchen", "bedroom"]);
        assert_eq!(reg.restrict(&["garage"]), Err("garage".to_string()));
    }
}
