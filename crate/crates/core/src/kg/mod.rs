//! ConceptNet-style weighted semantic graph: label normalization, dump
//! ingestion, the immutable in-memory graph and its compiled index file.

mod dump;
mod graph;
mod index;
mod normalize;

use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dump::{classify_assertion, load_dump, parse_assertion, RowOutcome};
pub use graph::{
    Direction, EdgeId, EdgeRef, GraphBuilder, GraphMetadata, KnowledgeGraph, LoadStats, Neighbor,
    NodeId, RelationFilter, RelationMask, Traversal,
};
pub use index::{load_index, load_index_with_source, save_index, FORMAT_VERSION, MAGIC};
pub use normalize::normalize_label;

#[derive(Debug, Error)]
pub enum KgError {
    #[error("label is empty after trimming")]
    EmptyLabel,
    #[error("concept `{0}` is not English")]
    NonEnglishConcept(String),
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("{malformed} of {rows} rows malformed (first at line {first_line}), over the 1% limit")]
    TooManyMalformedRows {
        malformed: u64,
        rows: u64,
        first_line: u64,
    },
    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("not a graph index (bad magic bytes)")]
    BadMagic,
    #[error("index checksum mismatch (file truncated or corrupted)")]
    ChecksumMismatch,
    #[error("invalid index contents: {0}")]
    InvalidIndex(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Canonical concept label: lowercase, underscores for spaces, no language
/// tag or sense suffix. Only constructed through [`normalize_label`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ConceptId(String);

impl ConceptId {
    pub fn new(raw: &str) -> Result<Self, KgError> {
        normalize_label(raw)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Caller guarantees `label` is already normalized (index loading).
    pub(crate) fn from_normalized(label: String) -> Self {
        ConceptId(label)
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for ConceptId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ConceptId {
    type Error = KgError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        normalize_label(&value)
    }
}

impl From<ConceptId> for String {
    fn from(c: ConceptId) -> String {
        c.0
    }
}

/// Relation tag of an assertion. Unknown URI tails are kept verbatim in
/// [`Relation::Other`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Relation {
    AtLocation,
    RelatedTo,
    UsedFor,
    IsA,
    PartOf,
    CapableOf,
    HasA,
    Other(String),
}

impl Relation {
    pub fn from_name(name: &str) -> Relation {
        match name {
            "AtLocation" => Relation::AtLocation,
            "RelatedTo" => Relation::RelatedTo,
            "UsedFor" => Relation::UsedFor,
            "IsA" => Relation::IsA,
            "PartOf" => Relation::PartOf,
            "CapableOf" => Relation::CapableOf,
            "HasA" => Relation::HasA,
            other => Relation::Other(other.to_string()),
        }
    }

    /// Parses `/r/<Name>`; returns `None` for anything else.
    pub fn from_uri(uri: &str) -> Option<Relation> {
        let tail = uri.strip_prefix("/r/")?.trim_end_matches('/');
        if tail.is_empty() || tail.chars().any(|c| c.is_whitespace()) {
            return None;
        }
        Some(Relation::from_name(tail))
    }

    pub fn name(&self) -> &str {
        match self {
            Relation::AtLocation => "AtLocation",
            Relation::RelatedTo => "RelatedTo",
            Relation::UsedFor => "UsedFor",
            Relation::IsA => "IsA",
            Relation::PartOf => "PartOf",
            Relation::CapableOf => "CapableOf",
            Relation::HasA => "HasA",
            Relation::Other(name) => name,
        }
    }
}

impl PartialOrd for Relation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Relation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.name().cmp(other.name())
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<String> for Relation {
    fn from(s: String) -> Self {
        Relation::from_name(&s)
    }
}

impl From<Relation> for String {
    fn from(r: Relation) -> String {
        r.name().to_string()
    }
}

impl std::str::FromStr for Relation {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Relation::from_name(s.trim()))
    }
}

/// A weighted assertion `start -relation-> end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub start: ConceptId,
    pub end: ConceptId,
    pub relation: Relation,
    pub weight: f64,
}

impl Edge {
    pub fn new(start: &str, relation: Relation, end: &str, weight: f64) -> Result<Edge, KgError> {
        Ok(Edge {
            start: normalize_label(start)?,
            end: normalize_label(end)?,
            relation,
            weight,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relation_uri_tail() {
        assert_eq!(Relation::from_uri("/r/AtLocation"), Some(Relation::AtLocation));
        assert_eq!(
            Relation::from_uri("/r/dbpedia/genre"),
            Some(Relation::Other("dbpedia/genre".into()))
        );
        assert_eq!(Relation::from_uri("AtLocation"), None);
        assert_eq!(Relation::from_uri("/r/"), None);
    }

    #[test]
    fn relation_order_is_by_name() {
        let mut rels = vec![
            Relation::UsedFor,
            Relation::Other("Antonym".into()),
            Relation::AtLocation,
            Relation::IsA,
        ];
        rels.sort();
        let names: Vec<_> = rels.iter().map(|r| r.name()).collect();
        assert_eq!(names, ["Antonym", "AtLocation", "IsA", "UsedFor"]);
    }

    #[test]
    fn concept_serde_normalizes() {
        let c: ConceptId = serde_json::from_str("\"Remote Control\"").unwrap();
        assert_eq!(c.as_str(), "remote_control");
        assert!(serde_json::from_str::<ConceptId>("\"  \"").is_err());
    }
}
