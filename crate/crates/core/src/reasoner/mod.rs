//! Path search between context and object concepts, scoring, and bin choice.
//!
//! Search starts at the bin's context concept. The first hop must use one of
//! `first_hop_relations` (default `AtLocation`), later hops any relation in
//! `relations`; every hop may walk its edge in either direction. Paths are
//! ranked by the active [`ScoringStrategy`], then by fewer hops, then by
//! their rendered text; bins by best score, fewer hops, then bin id.

mod classify;
mod config;
mod path;
mod search;
mod strategy;

use thiserror::Error;

pub use classify::{classify, classify_focused, BinScore, Decision, Reason};
pub use config::{parse_relations, BeamWidth, ConfigError, ConfigFile, SearchConfig};
pub use path::{parse_path, render_path, Hop, PathError, PathShape, ReasoningPath, Step};
pub use search::{enumerate_paths, enumerate_scored, rank_order, ScoredPath};
pub use strategy::{
    strategy_by_name, AverageWeight, DynStrategy, FirstEdgeWeight, ScoringStrategy,
    StrategyRegistry,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReasonError {
    #[error("no bins to classify into")]
    EmptyBinRegistry,
    #[error("focus is empty")]
    EmptyFocus,
    #[error("focus bin `{0}` is not in the registry")]
    FocusNotSubset(String),
}

/// Scores `p` under `strategy`.
pub fn score_path(p: &ReasoningPath, strategy: &dyn ScoringStrategy) -> f64 {
    strategy.score(&p.weights())
}
