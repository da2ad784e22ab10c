//! Commonsense-knowledge object organizer.
//!
//! Objects reported by a detector are assigned to context bins (kitchen,
//! pantry, ...) by searching weighted explanation paths in a ConceptNet-style
//! semantic graph. Every decision carries the path that justified it.
//!
//! * [`kg`] loads, normalizes and indexes the graph.
//! * [`reasoner`] enumerates and scores paths and picks a bin.
//! * [`client`] builds subgraphs from the online API through an on-disk cache.
//! * [`pipeline`] runs the detection stream through the reasoner and keeps sort state.
//! * [`eval`] runs the consistency, accuracy, adaptability and explanation audits.

pub mod bins;
pub mod client;
pub mod eval;
pub mod kg;
pub mod pipeline;
pub mod reasoner;

pub use kg::{ConceptId, Edge, KnowledgeGraph, Relation};
pub use reasoner::{classify, classify_focused, Decision, ReasoningPath, SearchConfig};
